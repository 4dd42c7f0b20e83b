//! Search for the three rotation angles of the preparation stage.
//!
//! The preparation stage on qubits `(a, b)` is
//! `R_a(θ3) · CNOT(b→a) · R_b(θ2) · CNOT(a→b) · R_a(θ1)` applied to `|00⟩`.
//! The solver scans a deterministic grid over `(−π, π]³`, seeds a
//! Levenberg-Marquardt refinement from every grid-local minimum in
//! lexicographic order and returns the first one that converges.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::gate::Gate;
use crate::error::{Error, Result};
use crate::hilbert::{PureState, QubitLabel, C64, ONE, ZERO};

/// Rotation angles of the preparation stage, each in `(−π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl PrepAngles {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        PrepAngles {
            theta1: wrap_angle(theta1),
            theta2: wrap_angle(theta2),
            theta3: wrap_angle(theta3),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Gate list of the preparation stage on qubits `a` (rotated first) and `b`.
pub fn prep_gates(angles: &PrepAngles, a: QubitLabel, b: QubitLabel) -> [Gate; 5] {
    [
        Gate::rotation(a, angles.theta1),
        Gate::cnot(a, b),
        Gate::rotation(b, angles.theta2),
        Gate::cnot(b, a),
        Gate::rotation(a, angles.theta3),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Spacing of the coarse grid in radians.
    pub grid_step: f64,
    /// Required `1 − |⟨target|result⟩|`.
    pub tolerance: f64,
    /// Grid minima above this residual are not refined.
    pub seed_threshold: f64,
    /// Maximum number of refinements before giving up.
    pub max_refinements: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grid_step: PI / 36.0,
            tolerance: 1e-12,
            seed_threshold: 0.05,
            max_refinements: 64,
        }
    }
}

/// Solution together with its achieved residual `1 − |overlap|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepSolution {
    pub angles: PrepAngles,
    pub residual: f64,
}

/// Finds angles whose preparation stage maps `|00⟩` onto `target`.
pub fn solve_prep_angles(target: &PureState) -> Result<PrepAngles> {
    solve_prep_angles_with(target, &SolverOptions::default()).map(|s| s.angles)
}

pub fn solve_prep_angles_with(target: &PureState, opts: &SolverOptions) -> Result<PrepSolution> {
    if target.n_qubits() != 2 {
        return Err(Error::Dimension {
            expected: 4,
            found: target.dim(),
        });
    }
    if target
        .amplitudes()
        .iter()
        .any(|a| a.im.abs() > 1e-12 || a.re < -1e-12)
    {
        return Err(Error::Domain(
            "preparation target must have real nonnegative amplitudes".into(),
        ));
    }
    if !(opts.grid_step > 0.0 && opts.grid_step <= PI) {
        return Err(Error::Domain(format!(
            "grid step {} out of range",
            opts.grid_step
        )));
    }
    let (a, b) = (target.labels()[0], target.labels()[1]);
    let register = [a, b];
    let goal: Vec<C64> = target.amplitudes().iter().copied().collect();

    let prepare = |x: &[f64; 3]| -> Vec<C64> {
        let mut amps = vec![ONE, ZERO, ZERO, ZERO];
        for g in prep_gates(
            &PrepAngles {
                theta1: x[0],
                theta2: x[1],
                theta3: x[2],
            },
            a,
            b,
        ) {
            g.apply_in_place(&register, &mut amps)
                .expect("preparation gates act on the target register");
        }
        amps
    };
    let residual = |x: &[f64; 3]| -> f64 {
        let amps = prepare(x);
        let ip: C64 = goal.iter().zip(&amps).map(|(g, s)| g.conj() * s).sum();
        1.0 - ip.norm()
    };
    // phase-aligned difference vector; its half squared norm equals the residual
    let residual_vector = |x: &[f64; 3]| -> Vec<f64> {
        let amps = prepare(x);
        let ip: C64 = goal.iter().zip(&amps).map(|(g, s)| g.conj() * s).sum();
        let phase = if ip.norm() > 0.0 {
            ip.conj() / ip.norm()
        } else {
            ONE
        };
        amps.iter()
            .zip(&goal)
            .flat_map(|(s, g)| {
                let d = s * phase - g;
                [d.re, d.im]
            })
            .collect()
    };

    let n = (2.0 * PI / opts.grid_step).round() as usize;
    let seeds = grid_local_minima(n, &residual, opts.seed_threshold);

    let mut best_residual = f64::INFINITY;
    for seed in seeds.into_iter().take(opts.max_refinements) {
        let (x, _) = levenberg_marquardt(&residual_vector, seed, 200);
        let r = residual(&x).max(0.0);
        best_residual = best_residual.min(r);
        if r <= opts.tolerance {
            return Ok(PrepSolution {
                angles: PrepAngles::new(x[0], x[1], x[2]),
                residual: r,
            });
        }
    }
    Err(Error::Solver { best_residual })
}

/// Scans an `n³` grid over `(−π, π]³` and returns, in lexicographic order,
/// every point no larger than its six periodic neighbours whose value is at
/// most `threshold`. Falls back to the global grid minimum.
pub(crate) fn grid_local_minima<F>(n: usize, f: &F, threshold: f64) -> Vec<[f64; 3]>
where
    F: Fn(&[f64; 3]) -> f64,
{
    let grid: Vec<f64> = (1..=n)
        .map(|k| -PI + k as f64 * 2.0 * PI / n as f64)
        .collect();
    let mut values = vec![0.0; n * n * n];
    for (i, &x) in grid.iter().enumerate() {
        for (j, &y) in grid.iter().enumerate() {
            for (k, &z) in grid.iter().enumerate() {
                values[(i * n + j) * n + k] = f(&[x, y, z]);
            }
        }
    }
    let at = |i: usize, j: usize, k: usize| values[(i * n + j) * n + k];
    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = at(i, j, k);
                if v > threshold {
                    continue;
                }
                let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
                let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
                let (kp, km) = ((k + 1) % n, (k + n - 1) % n);
                let neighbours = [
                    at(ip, j, k),
                    at(im, j, k),
                    at(i, jp, k),
                    at(i, jm, k),
                    at(i, j, kp),
                    at(i, j, km),
                ];
                if neighbours.iter().all(|&w| v <= w) {
                    seeds.push([grid[i], grid[j], grid[k]]);
                }
            }
        }
    }
    if seeds.is_empty() {
        let best = (0..values.len())
            .min_by(|&p, &q| values[p].total_cmp(&values[q]))
            .unwrap();
        let (i, j, k) = (best / (n * n), (best / n) % n, best % n);
        seeds.push([grid[i], grid[j], grid[k]]);
    }
    seeds
}

/// Minimizes `½‖f(x)‖²` over three parameters with a finite-difference
/// Jacobian. Returns the final point and cost.
pub(crate) fn levenberg_marquardt<F>(f: &F, x0: [f64; 3], max_iter: usize) -> ([f64; 3], f64)
where
    F: Fn(&[f64; 3]) -> Vec<f64>,
{
    const H: f64 = 1e-7;
    let cost = |r: &[f64]| 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    let mut x = x0;
    let mut r = f(&x);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        if c < 1e-30 {
            break;
        }
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, 3);
        for p in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[p] += H;
            xm[p] -= H;
            let (rp, rm) = (f(&xp), f(&xm));
            for row in 0..m {
                jac[(row, p)] = (rp[row] - rm[row]) / (2.0 * H);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &rv;
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for d in 0..3 {
                damped[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = damped.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [x[0] + step[0], x[1] + step[1], x[2] + step[2]];
            let rt = f(&trial);
            let ct = cost(&rt);
            if ct < c {
                let tiny = step.norm() < 1e-15;
                x = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !tiny;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (x, c)
}
