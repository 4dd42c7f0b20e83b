//! The 1→2 cloning network at gate level.
//!
//! Qubit 1 carries the original, qubit 2 is the blank copy and qubit 3 the
//! ancilla. A preparation stage entangles qubits 2 and 3 without touching
//! qubit 1; the cloning stage then spreads qubit 1 over all three with four
//! CNOTs.

mod gate;
mod solver;
pub mod triplicator;

use std::f64::consts::FRAC_PI_4;
use std::sync::OnceLock;

pub use gate::{apply_circuit, gate_unitary, Circuit, Gate};
pub(crate) use solver::{grid_local_minima, levenberg_marquardt};
pub use solver::{
    prep_gates, solve_prep_angles, solve_prep_angles_with, wrap_angle, PrepAngles, PrepSolution,
    SolverOptions,
};
pub use triplicator::{triplicate, Triplicate};

use crate::error::{Error, Result};
use crate::hilbert::{fidelity, q, tensor_product, DensityMatrix, PureState, QubitLabel, C64};

/// Original, copy and ancilla labels in the abstract network.
pub const ORIGINAL: QubitLabel = q(1);
pub const COPY: QubitLabel = q(2);
pub const ANCILLA: QubitLabel = q(3);

/// The target of the preparation stage,
/// `(2|00⟩ + |01⟩ + |11⟩)/√6` on qubits 2 and 3.
pub fn bh_prep_state() -> PureState {
    PureState::from_real(&[COPY, ANCILLA], &[2.0, 1.0, 0.0, 1.0])
        .expect("constant state is normalized")
}

/// Solver output for [`bh_prep_state`], computed once per process.
pub fn bh_prep_angles() -> Result<PrepAngles> {
    static ANGLES: OnceLock<Result<PrepAngles>> = OnceLock::new();
    ANGLES
        .get_or_init(|| solve_prep_angles(&bh_prep_state()))
        .clone()
}

/// The four CNOTs of the cloning stage.
pub fn cloning_gates(original: QubitLabel, copy: QubitLabel, ancilla: QubitLabel) -> [Gate; 4] {
    [
        Gate::cnot(original, copy),
        Gate::cnot(original, ancilla),
        Gate::cnot(copy, original),
        Gate::cnot(ancilla, original),
    ]
}

/// The cloning stage alone on qubits 1, 2, 3.
pub fn build_cloning_circuit() -> Circuit {
    Circuit::with_gates(
        &[ORIGINAL, COPY, ANCILLA],
        &cloning_gates(ORIGINAL, COPY, ANCILLA),
    )
    .expect("labels are distinct")
}

/// Preparation followed by cloning, for the given preparation angles.
pub fn build_network_with(angles: &PrepAngles) -> Circuit {
    let mut c = Circuit::new(&[ORIGINAL, COPY, ANCILLA]).expect("labels are distinct");
    c.extend(prep_gates(angles, COPY, ANCILLA))
        .and_then(|c| c.extend(cloning_gates(ORIGINAL, COPY, ANCILLA)))
        .expect("gates act on the register");
    c
}

/// The full two-stage network with solver-derived preparation angles.
pub fn build_network() -> Result<Circuit> {
    Ok(build_network_with(&bh_prep_angles()?))
}

/// Direct evaluation of the cloning transformation on `α|0⟩ + β|1⟩`:
/// `|0⟩ → √(2/3)|00⟩|0⟩ + √(1/3)|+⟩|1⟩`, `|1⟩ → √(2/3)|11⟩|1⟩ + √(1/3)|+⟩|0⟩`
/// with `|+⟩ = (|10⟩ + |01⟩)/√2`, output on qubits 1, 2, 3.
pub fn bh_reference_transform(psi: &PureState) -> Result<PureState> {
    if psi.n_qubits() != 1 {
        return Err(Error::Dimension {
            expected: 2,
            found: psi.dim(),
        });
    }
    let (alpha, beta) = (psi.amplitude(0), psi.amplitude(1));
    let big = (2.0f64 / 3.0).sqrt();
    let small = (1.0f64 / 6.0).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    amps[0b000] += alpha * big;
    amps[0b101] += alpha * small;
    amps[0b011] += alpha * small;
    amps[0b111] += beta * big;
    amps[0b100] += beta * small;
    amps[0b010] += beta * small;
    PureState::new(&[ORIGINAL, COPY, ANCILLA], amps)
}

/// Result of running the network on one input state.
#[derive(Debug, Clone)]
pub struct CloneOutcome {
    pub input: PureState,
    pub output: PureState,
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
    pub f1: f64,
    pub f2: f64,
}

/// Clones `cos θ|0⟩ + e^{iδ} sin θ|1⟩` through the gate network and
/// returns both replicas and their fidelities.
pub fn clone_state(theta: f64, delta: f64) -> Result<CloneOutcome> {
    let network = build_network()?;
    let input = PureState::from_angles(ORIGINAL, theta, delta);
    let blanks = PureState::basis(&[COPY, ANCILLA], &[0, 0])?;
    let output = network.apply(&tensor_product(&input, &blanks)?)?;
    let full = output.to_density();
    let rho1 = full.partial_trace(&[ORIGINAL])?;
    let rho2 = full.partial_trace(&[COPY])?;
    let f1 = fidelity(&input, &rho1)?;
    let f2 = fidelity(&input, &rho2)?;
    Ok(CloneOutcome {
        input,
        output,
        rho1,
        rho2,
        f1,
        f2,
    })
}

/// Optimal fidelity of a symmetric universal `M → N` qubit cloner,
/// `(MN + N + M) / (N(M + 2))`.
pub fn optimal_fidelity(m: u64, n: u64) -> Result<f64> {
    if m == 0 || n < m {
        return Err(Error::Domain(format!(
            "optimal fidelity needs 1 <= M <= N, got M = {m}, N = {n}"
        )));
    }
    let (m, n) = (m as f64, n as f64);
    Ok((m * n + n + m) / (n * (m + 2.0)))
}

/// Rotation taking the auxiliary qubit from `|0⟩` to `(|0⟩ + |1⟩)/√2`.
pub fn aux_preparation() -> Gate {
    Gate::rotation(QubitLabel::AUX, FRAC_PI_4)
}

/// Gate-level measurement stage as run directly after the network: the
/// auxiliary qubit is prepared and swaps qubits 1 and 2 when it is `|1⟩`.
pub fn direct_measurement_circuit(angles: &PrepAngles) -> Circuit {
    let mut c = Circuit::new(&[QubitLabel::AUX, ORIGINAL, COPY, ANCILLA]).expect("distinct");
    c.extend(prep_gates(angles, COPY, ANCILLA))
        .and_then(|c| c.extend(cloning_gates(ORIGINAL, COPY, ANCILLA)))
        .and_then(|c| c.push(aux_preparation()))
        .and_then(|c| c.push(Gate::cswap(QubitLabel::AUX, ORIGINAL, COPY)))
        .expect("gates act on the register");
    c
}

/// Gate sequence mirrored by the optical setup. The original is first swapped
/// from the polarization (qubit 1) into path qubit 2, so the preparation runs
/// on qubits 1 and 3 and the roles of 1 and 2 in the cloning stage exchange.
pub fn swapped_measurement_circuit(angles: &PrepAngles) -> Circuit {
    let mut c = Circuit::new(&[QubitLabel::AUX, ORIGINAL, COPY, ANCILLA]).expect("distinct");
    c.push(Gate::swap(ORIGINAL, COPY))
        .and_then(|c| c.extend(prep_gates(angles, ORIGINAL, ANCILLA)))
        .and_then(|c| c.extend(cloning_gates(COPY, ORIGINAL, ANCILLA)))
        .and_then(|c| c.push(aux_preparation()))
        .and_then(|c| c.push(Gate::cswap(QubitLabel::AUX, ORIGINAL, COPY)))
        .expect("gates act on the register");
    c
}
