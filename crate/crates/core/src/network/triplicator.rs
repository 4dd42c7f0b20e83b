//! Triplicator configuration of the network.
//!
//! With a different preparation state, the same four-CNOT cloning stage
//! spreads a real-amplitude original equally over all three qubits. The
//! preparation state used here was found by [`search_triplicator_prep`]
//! (run `cargo run --example derive_triplicator`) and frozen in
//! [`TRIPLICATOR_PREP_AMPLITUDES`].

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::{
    build_network_with, grid_local_minima, levenberg_marquardt, prep_gates, solve_prep_angles,
    Circuit, PrepAngles, ANCILLA, COPY, ORIGINAL,
};
use crate::error::{Error, Result};
use crate::hilbert::{fidelity, tensor_product, DensityMatrix, PureState, C64};

/// Amplitudes of the triplicator preparation state on qubits 2, 3 in the
/// order `|00⟩, |01⟩, |10⟩, |11⟩`: `(3, 1, 1, 1)/√12`.
pub const TRIPLICATOR_PREP_AMPLITUDES: [f64; 4] = [
    0.866_025_403_784_438_6,
    0.288_675_134_594_812_9,
    0.288_675_134_594_812_9,
    0.288_675_134_594_812_9,
];

pub fn triplicator_prep_state() -> PureState {
    PureState::from_real(&[COPY, ANCILLA], &TRIPLICATOR_PREP_AMPLITUDES)
        .expect("constant state is normalized")
}

/// Solver-found preparation angles for the triplicator, computed once.
pub fn triplicator_prep_angles() -> Result<PrepAngles> {
    static ANGLES: OnceLock<Result<PrepAngles>> = OnceLock::new();
    ANGLES
        .get_or_init(|| solve_prep_angles(&triplicator_prep_state()))
        .clone()
}

/// Reduced states of the three output qubits.
#[derive(Debug, Clone)]
pub struct Triplicate {
    pub input: PureState,
    /// Single-qubit matrices of qubits 1, 2 and 3, all relabeled onto qubit 1.
    pub rhos: [DensityMatrix; 3],
    pub fidelities: [f64; 3],
}

impl Triplicate {
    /// Largest elementwise difference between any two of the three copies.
    pub fn asymmetry(&self) -> f64 {
        let d = |a: &DensityMatrix, b: &DensityMatrix| a.max_abs_diff(b).expect("same size");
        d(&self.rhos[0], &self.rhos[1])
            .max(d(&self.rhos[0], &self.rhos[2]))
            .max(d(&self.rhos[1], &self.rhos[2]))
    }
}

fn outputs_of(network: &Circuit, theta: f64) -> Result<Triplicate> {
    let input = PureState::from_angles(ORIGINAL, theta, 0.0);
    let blanks = PureState::basis(&[COPY, ANCILLA], &[0, 0])?;
    let out = network.apply(&tensor_product(&input, &blanks)?)?;
    let mut rhos = Vec::with_capacity(3);
    let mut fidelities = [0.0; 3];
    for (i, label) in [ORIGINAL, COPY, ANCILLA].into_iter().enumerate() {
        let r = out.reduced_qubit(label)?.relabeled(&[ORIGINAL])?;
        fidelities[i] = fidelity(&input, &r)?;
        rhos.push(r);
    }
    let rhos: [DensityMatrix; 3] = rhos.try_into().expect("three copies");
    Ok(Triplicate {
        input,
        rhos,
        fidelities,
    })
}

/// Runs the triplicator on the real input `cos θ|0⟩ + sin θ|1⟩`.
pub fn triplicate(theta: f64) -> Result<Triplicate> {
    let network = build_network_with(&triplicator_prep_angles()?);
    outputs_of(&network, theta)
}

/// Outcome of the numerical search for a triplicator preparation.
#[derive(Debug, Clone)]
pub struct TriplicatorSearch {
    pub angles: PrepAngles,
    /// Preparation state on qubits 2, 3 with the global sign fixed so the
    /// largest-magnitude amplitude is positive.
    pub prep_state: PureState,
    /// Common fidelity of the three copies.
    pub fidelity: f64,
    /// Final value of the least-squares objective.
    pub cost: f64,
}

/// Searches preparation angles for which the three output copies coincide
/// and share a fidelity independent of the real input angle. Among all
/// converged solutions the one with the highest fidelity is returned.
pub fn search_triplicator_prep() -> Result<TriplicatorSearch> {
    let thetas: Vec<f64> = (0..8).map(|k| k as f64 * PI / 8.0 + 0.1).collect();
    let objective = |x: &[f64; 3]| -> Vec<f64> {
        let angles = PrepAngles {
            theta1: x[0],
            theta2: x[1],
            theta3: x[2],
        };
        let network = build_network_with(&angles);
        let mut res = Vec::new();
        let mut reference = None;
        for &t in &thetas {
            let out = outputs_of(&network, t).expect("network acts on qubits 1-3");
            for other in &out.rhos[1..] {
                for (a, b) in out.rhos[0].matrix().iter().zip(other.matrix().iter()) {
                    let d: C64 = a - b;
                    res.push(d.re);
                    res.push(d.im);
                }
            }
            let f = out.fidelities[0];
            let f0 = *reference.get_or_insert(f);
            res.push(f - f0);
        }
        res
    };
    let cost = |x: &[f64; 3]| 0.5 * objective(x).iter().map(|v| v * v).sum::<f64>();

    let seeds = grid_local_minima(24, &cost, f64::INFINITY);

    let mut best: Option<TriplicatorSearch> = None;
    for seed in seeds {
        let (x, c) = levenberg_marquardt(&objective, seed, 200);
        if c > 1e-20 {
            continue;
        }
        let angles = PrepAngles::new(x[0], x[1], x[2]);
        let out = outputs_of(&build_network_with(&angles), 0.3)?;
        let f = out.fidelities[0];
        if best.as_ref().is_none_or(|b| f > b.fidelity + 1e-9) {
            let reg = [COPY, ANCILLA];
            let prep = Circuit::with_gates(&reg, &prep_gates(&angles, COPY, ANCILLA))?
                .apply(&PureState::basis(&reg, &[0, 0])?)?;
            let lead = prep
                .amplitudes()
                .iter()
                .copied()
                .max_by(|p, q| p.norm().total_cmp(&q.norm()))
                .expect("nonempty");
            let sign = lead / lead.norm();
            let fixed: Vec<C64> = prep.amplitudes().iter().map(|z| z / sign).collect();
            best = Some(TriplicatorSearch {
                angles,
                prep_state: PureState::new(&reg, fixed)?,
                fidelity: f,
                cost: c,
            });
        }
    }
    best.ok_or(Error::Solver {
        best_residual: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_input_gives_three_equal_copies() {
        let t = triplicate(0.0).unwrap();
        assert!(t.asymmetry() < 1e-10);
    }

    #[test]
    fn fidelity_is_state_independent() {
        let f0 = triplicate(0.0).unwrap().fidelities[0];
        let f1 = triplicate(PI / 4.0).unwrap().fidelities[0];
        assert!((f0 - f1).abs() < 1e-9);
    }

    #[test]
    fn frozen_constant_matches_search() {
        let found = search_triplicator_prep().unwrap();
        let frozen = triplicator_prep_state();
        assert!(found.prep_state.overlap(&frozen).unwrap() > 1.0 - 1e-10);
    }
}
