//! Systematic error budget: the linear fidelity bound and Monte Carlo
//! sweeps over waveplate/polarizer orientation jitter and path-count
//! oscillation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{fidelity, q, PureState};
use crate::optics::OpticalTrain;
use crate::tomography::{analyzers, optical_table, reconstruct_replica, CountTable, Replica};

pub const FIVE_SIXTHS: f64 = 5.0 / 6.0;

/// Relative count oscillation of the four paths of one replica and the
/// orientation precision of the optics, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub delta_c: [f64; 4],
    pub delta_theta: f64,
}

impl ErrorBudget {
    /// Budget with the total count oscillation spread evenly over the paths.
    pub fn uniform(delta_c_total: f64, delta_theta: f64) -> Self {
        ErrorBudget {
            delta_c: [delta_c_total / 4.0; 4],
            delta_theta,
        }
    }
}

/// `Σ ΔC_i + 1.5 Δθ`.
pub fn fidelity_error_bound(b: &ErrorBudget) -> Result<f64> {
    if b.delta_c
        .iter()
        .chain([&b.delta_theta])
        .any(|x| !(*x >= 0.0))
    {
        return Err(Error::Domain(format!(
            "error budget entries must be nonnegative: {b:?}"
        )));
    }
    Ok(b.delta_c.iter().sum::<f64>() + 1.5 * b.delta_theta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationConfig {
    pub theta: f64,
    pub delta: f64,
    /// Half-width of the uniform orientation error of every waveplate and
    /// polarizer, radians.
    pub jitter: f64,
    /// `Σ|u_i|` of the path-count factors `1 + u_i`, per replica.
    pub delta_c_total: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSummary {
    pub config: PerturbationConfig,
    /// Fidelities of both replicas for every sample.
    pub fidelities: Vec<[f64; 2]>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Analytic bound for the same budget.
    pub bound: f64,
    /// Indices of samples with a replica deviating by more than the bound.
    pub flagged: Vec<usize>,
}

impl PerturbationSummary {
    /// `|F − 5/6|` over all samples and both replicas.
    pub fn deviations(&self) -> impl Iterator<Item = f64> + '_ {
        self.fidelities
            .iter()
            .flatten()
            .map(|f| (f - FIVE_SIXTHS).abs())
    }

    pub fn mean_fidelity(&self) -> [f64; 2] {
        let n = self.fidelities.len().max(1) as f64;
        [0, 1].map(|r| self.fidelities.iter().map(|f| f[r]).sum::<f64>() / n)
    }

    pub fn std_fidelity(&self) -> [f64; 2] {
        [0, 1].map(|r| {
            let xs: Vec<f64> = self.fidelities.iter().map(|f| f[r]).collect();
            crate::tomography::std_dev(&xs)
        })
    }
}

fn jitter_train(t: &OpticalTrain, jitter: f64, rng: &mut ChaCha8Rng) -> OpticalTrain {
    if jitter == 0.0 {
        return t.clone();
    }
    t.map_axis_angles(|a| a + rng.random_range(-jitter..=jitter))
}

/// `u` with `Σ|u_i| = total`, direction uniform on the cube.
fn count_oscillation(total: f64, rng: &mut ChaCha8Rng) -> [f64; 4] {
    if total == 0.0 {
        return [0.0; 4];
    }
    let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let norm: f64 = v.iter().map(|x: &f64| x.abs()).sum();
    v.map(|x| x * total / norm)
}

fn sample_fidelities(
    setup: &OpticalTrain,
    ideal_analyzers: &[OpticalTrain; 4],
    input: &PureState,
    cfg: &PerturbationConfig,
    index: usize,
) -> Result<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let train = jitter_train(setup, cfg.jitter, &mut rng);
    let an = ideal_analyzers
        .each_ref()
        .map(|a| jitter_train(a, cfg.jitter, &mut rng));
    let mut table: CountTable = optical_table(&train, &an)?;
    for group in [0..4, 4..8] {
        let u = count_oscillation(cfg.delta_c_total, &mut rng);
        for (row, ui) in table[group].iter_mut().zip(u) {
            for c in row.iter_mut() {
                *c *= 1.0 + ui;
            }
        }
    }
    let r1 = reconstruct_replica(&table, Replica::One)?;
    let r2 = reconstruct_replica(&table, Replica::Two)?;
    Ok([fidelity(input, &r1)?, fidelity(input, &r2)?])
}

/// Runs the exact pipeline `n_samples` times through randomly mis-set
/// copies of `setup` and the analyzers. Samples run in parallel, each with
/// its own random stream, so the result depends only on the config.
pub fn perturbation_sweep(
    setup: &OpticalTrain,
    cfg: &PerturbationConfig,
) -> Result<PerturbationSummary> {
    if !(cfg.jitter >= 0.0 && cfg.delta_c_total >= 0.0) {
        return Err(Error::Domain(
            "jitter and count oscillation must be nonnegative".into(),
        ));
    }
    if cfg.n_samples == 0 {
        return Err(Error::Domain("at least one sample is needed".into()));
    }
    let ideal = analyzers()?;
    let input = PureState::from_angles(q(1), cfg.theta, cfg.delta);
    let fidelities: Vec<[f64; 2]> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| sample_fidelities(setup, &ideal, &input, cfg, i))
        .collect::<Result<_>>()?;
    let bound = fidelity_error_bound(&ErrorBudget::uniform(cfg.delta_c_total, cfg.jitter))?;
    let flagged = fidelities
        .iter()
        .enumerate()
        .filter(|(_, f)| f.iter().any(|x| (x - FIVE_SIXTHS).abs() > bound + 1e-12))
        .map(|(i, _)| i)
        .collect();
    let mut summary = PerturbationSummary {
        config: *cfg,
        fidelities,
        min: 0.0,
        mean: 0.0,
        max: 0.0,
        bound,
        flagged,
    };
    let devs: Vec<f64> = summary.deviations().collect();
    summary.min = devs.iter().copied().fold(f64::INFINITY, f64::min);
    summary.max = devs.iter().copied().fold(0.0, f64::max);
    summary.mean = devs.iter().sum::<f64>() / devs.len() as f64;
    Ok(summary)
}
