//! Compilation of gate circuits into optical trains and the equivalence
//! check between the two.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::OnceLock;

use super::{
    train_unitary_in_qubits, ModeSpace, OpticalElement, OpticalTrain, Polarization, QubitMapping,
};
use crate::error::{Error, Result};
use crate::hilbert::{canonical_labels, QubitLabel, C64};
use crate::network::{aux_preparation, bh_prep_angles, swapped_measurement_circuit, Circuit, Gate};

const CLONER_PATHS: usize = 8;

fn hwp(path: usize, angle: f64) -> OpticalElement {
    OpticalElement::Hwp { path, angle }
}

/// Rotation `R(angle)` of the path qubit spanned by `(p0, p1)`, applied only
/// to the `control` polarization component. Built from two PBS crossings and
/// HWPs: the controlled component of `p0` is routed into the spare
/// polarization slot of `p1`, rotated there, and routed back.
fn crot_elements(control: Polarization, p0: usize, p1: usize, angle: f64) -> Vec<OpticalElement> {
    let core = [
        hwp(p1, FRAC_PI_4),
        OpticalElement::Pbs { a: p0, b: p1 },
        hwp(p1, 0.0),
        hwp(p1, -angle / 2.0),
        OpticalElement::Pbs { a: p0, b: p1 },
        hwp(p1, FRAC_PI_4),
    ];
    match control {
        Polarization::V => core.to_vec(),
        Polarization::H => {
            let flip = [hwp(p0, FRAC_PI_4), hwp(p1, FRAC_PI_4)];
            flip.iter()
                .chain(core.iter())
                .chain(flip.iter())
                .copied()
                .collect()
        }
    }
}

/// Fragment rotating the path qubit `(p0 → 0, p1 → 1)` by `angle` when the
/// photon has polarization `control`. With `angle = π/2` this is a CNOT from
/// polarization to path up to the sign of one amplitude.
pub fn controlled_path_rotation(
    space: ModeSpace,
    control: Polarization,
    p0: usize,
    p1: usize,
    angle: f64,
) -> Result<OpticalTrain> {
    let mut t = OpticalTrain::new(space);
    t.extend(crot_elements(control, p0, p1, angle))?;
    Ok(t)
}

/// Exchanges both polarization modes of two paths.
fn path_swap(p: usize, q: usize) -> [OpticalElement; 6] {
    [
        OpticalElement::Pbs { a: p, b: q },
        hwp(p, FRAC_PI_4),
        hwp(q, FRAC_PI_4),
        OpticalElement::Pbs { a: p, b: q },
        hwp(p, FRAC_PI_4),
        hwp(q, FRAC_PI_4),
    ]
}

/// Path-qubit rotation on an 8-path space as four symmetric beam splitters
/// with phase compensation. Used to bring in the auxiliary qubit, which is
/// the most significant path digit.
pub fn aux_beam_splitters() -> Vec<OpticalElement> {
    let mut out = Vec::with_capacity(12);
    for p in 0..CLONER_PATHS / 2 {
        let upper = p + CLONER_PATHS / 2;
        out.push(OpticalElement::PhaseShift {
            path: upper,
            phase: FRAC_PI_2,
        });
        out.push(OpticalElement::Bs { a: p, b: upper });
        out.push(OpticalElement::PhaseShift {
            path: upper,
            phase: -FRAC_PI_2,
        });
    }
    out
}

struct Compiler<'a> {
    mapping: &'a QubitMapping,
    /// Only paths whose index contains all of these bits are touched.
    require: usize,
}

impl Compiler<'_> {
    fn paths(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mapping.n_paths()).filter(move |p| p & self.require == self.require)
    }

    /// Pairs `(p, p | mask)` with `p` lacking `mask`.
    fn pairs(&self, mask: usize) -> Vec<(usize, usize)> {
        self.paths()
            .filter(|p| p & mask == 0)
            .map(|p| (p, p | mask))
            .collect()
    }

    fn mask(&self, label: QubitLabel) -> Result<Option<usize>> {
        if label == self.mapping.polarization {
            return Ok(None);
        }
        self.mapping
            .path_mask(label)
            .map(Some)
            .ok_or_else(|| Error::Labeling(format!("qubit {label} is not encoded by the mapping")))
    }

    fn rotation(&self, target: QubitLabel, angle: f64) -> Result<Vec<OpticalElement>> {
        Ok(match self.mask(target)? {
            None => self
                .paths()
                .flat_map(|p| [hwp(p, 0.0), hwp(p, angle / 2.0)])
                .collect(),
            Some(m) => self
                .pairs(m)
                .into_iter()
                .flat_map(|(p0, p1)| {
                    let mut v = crot_elements(Polarization::H, p0, p1, angle);
                    v.extend(crot_elements(Polarization::V, p0, p1, angle));
                    v
                })
                .collect(),
        })
    }

    fn cnot(&self, control: QubitLabel, target: QubitLabel) -> Result<Vec<OpticalElement>> {
        Ok(match (self.mask(control)?, self.mask(target)?) {
            (None, Some(t)) => self
                .pairs(t)
                .into_iter()
                .map(|(a, b)| OpticalElement::Pbs { a, b })
                .collect(),
            (Some(c), None) => self
                .paths()
                .filter(|p| p & c != 0)
                .map(|p| hwp(p, FRAC_PI_4))
                .collect(),
            (Some(c), Some(t)) => self
                .pairs(t)
                .into_iter()
                .filter(|(p, _)| p & c != 0)
                .flat_map(|(p, q)| path_swap(p, q))
                .collect(),
            (None, None) => unreachable!("validated distinct labels"),
        })
    }

    fn swap(&self, a: QubitLabel, b: QubitLabel) -> Result<Vec<OpticalElement>> {
        let mut v = self.cnot(a, b)?;
        v.extend(self.cnot(b, a)?);
        v.extend(self.cnot(a, b)?);
        Ok(v)
    }

    fn gate(&self, gate: &Gate) -> Result<Vec<OpticalElement>> {
        canonical_labels(&gate.labels())?;
        match *gate {
            Gate::Rotation { target, angle } => self.rotation(target, angle),
            Gate::Cnot { control, target } => self.cnot(control, target),
            Gate::Swap { a, b } => self.swap(a, b),
            Gate::Cswap { control, a, b } => {
                let m = self.mask(control)?.ok_or_else(|| {
                    Error::Domain("controlled swap needs a path qubit as control".into())
                })?;
                let inner = Compiler {
                    mapping: self.mapping,
                    require: self.require | m,
                };
                inner.swap(a, b)
            }
        }
    }
}

/// Optical elements implementing `gate` under `mapping`.
pub fn compile_gate(gate: &Gate, mapping: &QubitMapping) -> Result<Vec<OpticalElement>> {
    Compiler {
        mapping,
        require: 0,
    }
    .gate(gate)
}

/// Compiles a whole circuit on the standard mapping for its register size.
/// Rotations of the auxiliary qubit by π/4 become beam splitters.
pub fn compile_circuit(circuit: &Circuit) -> Result<OpticalTrain> {
    let n_paths = 1usize << (circuit.register().len() - 1);
    let mapping = QubitMapping::standard(n_paths)?;
    if mapping.register()? != circuit.register() {
        return Err(Error::Labeling(format!(
            "circuit register {:?} does not match the {n_paths}-path mapping",
            circuit.register()
        )));
    }
    let mut train = OpticalTrain::new(ModeSpace::new(n_paths)?);
    for g in circuit.gates() {
        if n_paths == CLONER_PATHS && *g == aux_preparation() {
            train.extend(aux_beam_splitters())?;
        } else {
            train.extend(compile_gate(g, &mapping)?)?;
        }
    }
    Ok(train)
}

/// HWP and adjustable waveplate on path 0 turning `|H⟩` into
/// `cos θ|H⟩ + e^{iδ} sin θ|V⟩`.
pub fn input_preparation(theta: f64, delta: f64) -> Result<OpticalTrain> {
    let mut t = OpticalTrain::new(ModeSpace::new(CLONER_PATHS)?);
    t.push(hwp(0, theta / 2.0))?;
    t.push(OpticalElement::Ajwp {
        path: 0,
        retardance: delta,
    })?;
    Ok(t)
}

/// The cloning setup after input preparation: swap of qubits 1 and 2,
/// entanglement of qubits 1 and 3, the cloning interferometers, the beam
/// splitters bringing in the auxiliary path qubit and the controlled swap.
/// The result is checked against the gate-level circuit before returning.
pub fn build_cloner_train() -> Result<OpticalTrain> {
    let circuit = swapped_measurement_circuit(&bh_prep_angles()?);
    let train = compile_circuit(&circuit)?;
    let report = verify_equivalence(&train, &circuit, 1e-9)?;
    if !report.passed {
        return Err(Error::Equivalence {
            deviation: report.deviation,
        });
    }
    Ok(train)
}

/// [`build_cloner_train`], built once per process.
pub fn cloner_train() -> Result<&'static OpticalTrain> {
    static TRAIN: OnceLock<Result<OpticalTrain>> = OnceLock::new();
    TRAIN
        .get_or_init(build_cloner_train)
        .as_ref()
        .map_err(Clone::clone)
}

/// Input preparation followed by the cloner train.
pub fn build_setup_train(theta: f64, delta: f64) -> Result<OpticalTrain> {
    let mut t = input_preparation(theta, delta)?;
    t.append(cloner_train()?)?;
    Ok(t)
}

/// Outcome of comparing a train with a circuit up to global phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// Largest elementwise `|U_train − e^{iφ} U_circuit|`.
    pub deviation: f64,
    /// The global phase `φ` used.
    pub phase: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares `train`, read through the standard mapping, with `circuit`.
/// The phase is fixed by `arg tr(U_circuit† U_train)`.
pub fn verify_equivalence(
    train: &OpticalTrain,
    circuit: &Circuit,
    tol: f64,
) -> Result<EquivalenceReport> {
    let mapping = QubitMapping::standard(train.space().n_paths())?;
    let register = mapping.register()?;
    if register != circuit.register() {
        return Err(Error::Dimension {
            expected: 1 << register.len(),
            found: 1 << circuit.register().len(),
        });
    }
    let ut = train_unitary_in_qubits(train, &mapping)?;
    let uc = circuit.unitary()?;
    let overlap: C64 = (uc.adjoint() * &ut).trace();
    let phase = if overlap.norm() > 1e-12 {
        overlap.arg()
    } else {
        0.0
    };
    let rot = C64::from_polar(1.0, phase);
    let deviation = ut
        .iter()
        .zip(uc.iter())
        .map(|(a, b)| (a - b * rot).norm())
        .fold(0.0, f64::max);
    Ok(EquivalenceReport {
        deviation,
        phase,
        tolerance: tol,
        passed: deviation <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{q, tensor_product, unitarity_defect, PureState, ONE, ZERO};
    use crate::network::{gate_unitary, ANCILLA, COPY, ORIGINAL};
    use crate::optics::{modes_to_qubits, PhotonState};
    use nalgebra::DMatrix;

    fn two_path_unitary(t: &OpticalTrain) -> DMatrix<C64> {
        train_unitary_in_qubits(t, &QubitMapping::standard(2).unwrap()).unwrap()
    }

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// `|p⟩|r⟩ → |p⟩ R(θ)^p |r⟩` with control value `p = 1` for `V`.
    fn controlled_rotation(theta: f64, on_v: bool) -> DMatrix<C64> {
        let (s, c) = theta.sin_cos();
        let mut m = DMatrix::from_element(4, 4, ZERO);
        let block = if on_v { 2 } else { 0 };
        let other = 2 - block;
        m[(other, other)] = ONE;
        m[(other + 1, other + 1)] = ONE;
        m[(block, block)] = C64::new(c, 0.0);
        m[(block, block + 1)] = C64::new(-s, 0.0);
        m[(block + 1, block)] = C64::new(s, 0.0);
        m[(block + 1, block + 1)] = C64::new(c, 0.0);
        m
    }

    #[test]
    fn crot_fragment_is_controlled_rotation() {
        let space = ModeSpace::new(2).unwrap();
        for theta in [0.0, 0.3, -1.2, FRAC_PI_2, 2.5] {
            for (pol, on_v) in [(Polarization::V, true), (Polarization::H, false)] {
                let t = controlled_path_rotation(space, pol, 0, 1, theta).unwrap();
                let d = max_diff(&two_path_unitary(&t), &controlled_rotation(theta, on_v));
                assert!(d < 1e-10, "θ={theta} {pol:?}: {d}");
            }
        }
    }

    #[test]
    fn crot_at_zero_is_identity() {
        let space = ModeSpace::new(2).unwrap();
        let t = controlled_path_rotation(space, Polarization::V, 0, 1, 0.0).unwrap();
        assert!(max_diff(&t.matrix(), &DMatrix::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn crot_at_right_angle_is_cnot_up_to_sign() {
        let space = ModeSpace::new(2).unwrap();
        let t = controlled_path_rotation(space, Polarization::V, 0, 1, FRAC_PI_2).unwrap();
        let u = two_path_unitary(&t);
        let cnot = gate_unitary(&Gate::cnot(q(1), q(2)), &[q(1), q(2)]).unwrap();
        for (a, b) in u.iter().zip(cnot.iter()) {
            assert!((a.norm() - b.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn three_fragments_make_swap() {
        // controlled path flip, path-controlled polarization flip, inverse flip
        let space = ModeSpace::new(2).unwrap();
        let mut t = controlled_path_rotation(space, Polarization::V, 0, 1, FRAC_PI_2).unwrap();
        t.push(hwp(1, FRAC_PI_4)).unwrap();
        t.append(&controlled_path_rotation(space, Polarization::V, 0, 1, -FRAC_PI_2).unwrap())
            .unwrap();
        let swap = gate_unitary(&Gate::swap(q(1), q(2)), &[q(1), q(2)]).unwrap();
        assert!(max_diff(&two_path_unitary(&t), &swap) < 1e-10);
    }

    #[test]
    fn aux_beam_splitters_rotate_aux() {
        let mut t = OpticalTrain::new(ModeSpace::new(8).unwrap());
        t.extend(aux_beam_splitters()).unwrap();
        let reg = [QubitLabel::AUX, ORIGINAL, COPY, ANCILLA];
        let c = Circuit::with_gates(&reg, &[aux_preparation()]).unwrap();
        let r = verify_equivalence(&t, &c, 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.phase.abs() < 1e-12);
    }

    #[test]
    fn every_gate_compiles_exactly() {
        let reg = [QubitLabel::AUX, ORIGINAL, COPY, ANCILLA];
        let all = [QubitLabel::AUX, ORIGINAL, COPY, ANCILLA];
        let mut gates = Vec::new();
        for &a in &all {
            gates.push(Gate::rotation(a, 0.77));
            for &b in &all {
                if a != b {
                    gates.push(Gate::cnot(a, b));
                    gates.push(Gate::swap(a, b));
                }
            }
        }
        gates.push(Gate::cswap(QubitLabel::AUX, ORIGINAL, COPY));
        gates.push(Gate::cswap(COPY, ORIGINAL, ANCILLA));
        gates.push(Gate::cswap(ANCILLA, QubitLabel::AUX, COPY));
        for g in gates {
            let c = Circuit::with_gates(&reg, &[g]).unwrap();
            let t = compile_circuit(&c).unwrap();
            let r = verify_equivalence(&t, &c, 1e-12).unwrap();
            assert!(r.passed, "{g}: {}", r.deviation);
        }
    }

    #[test]
    fn polarization_controlled_swap_is_rejected() {
        let m = QubitMapping::standard(8).unwrap();
        assert!(compile_gate(&Gate::cswap(ORIGINAL, COPY, ANCILLA), &m).is_err());
        assert!(compile_gate(&Gate::cnot(q(4), COPY), &m).is_err());
    }

    #[test]
    fn empty_train_matches_empty_circuit() {
        let reg = [QubitLabel::AUX, ORIGINAL, COPY, ANCILLA];
        let t = OpticalTrain::new(ModeSpace::new(8).unwrap());
        let r = verify_equivalence(&t, &Circuit::new(&reg).unwrap(), 1e-12).unwrap();
        assert_eq!(r.deviation, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn register_mismatch_is_a_dimension_error() {
        let t = OpticalTrain::new(ModeSpace::new(4).unwrap());
        let c = Circuit::new(&[QubitLabel::AUX, ORIGINAL, COPY, ANCILLA]).unwrap();
        assert!(matches!(
            verify_equivalence(&t, &c, 1e-9),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn cloner_train_matches_gate_level() {
        let t = build_cloner_train().unwrap();
        assert!(t.is_lossless());
        assert!(unitarity_defect(&t.matrix()) < 1e-12);
        let c = swapped_measurement_circuit(&bh_prep_angles().unwrap());
        let r = verify_equivalence(&t, &c, 1e-9).unwrap();
        assert!(r.passed, "{}", r.deviation);
    }

    #[test]
    fn misset_waveplate_shows_up_and_grows() {
        let t = build_cloner_train().unwrap();
        let c = swapped_measurement_circuit(&bh_prep_angles().unwrap());
        let idx = t
            .elements()
            .iter()
            .position(|e| matches!(e, OpticalElement::Hwp { .. }))
            .unwrap();
        let deg = std::f64::consts::PI / 180.0;
        let d1 = verify_equivalence(&t.with_angle_offset(idx, 0.1 * deg).unwrap(), &c, 1e-9)
            .unwrap()
            .deviation;
        let d2 = verify_equivalence(&t.with_angle_offset(idx, 0.5 * deg).unwrap(), &c, 1e-9)
            .unwrap()
            .deviation;
        assert!(d1 > 1e-6);
        assert!(d2 > d1);
    }

    #[test]
    fn blank_input_distribution_matches_gate_level() {
        let setup = build_setup_train(0.0, 0.0).unwrap();
        let space = setup.space();
        let out = setup
            .apply(&PhotonState::single(space, 0, Polarization::H).unwrap())
            .unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);

        let reg = [QubitLabel::AUX, ORIGINAL, COPY, ANCILLA];
        let c = swapped_measurement_circuit(&bh_prep_angles().unwrap());
        let input = tensor_product(
            &PureState::basis(&[QubitLabel::AUX], &[0]).unwrap(),
            &tensor_product(
                &PureState::from_angles(ORIGINAL, 0.0, 0.0),
                &PureState::basis(&[COPY, ANCILLA], &[0, 0]).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        let gate_out = c.apply(&input).unwrap();
        let optics_out = modes_to_qubits(&out, &QubitMapping::standard(8).unwrap()).unwrap();
        assert_eq!(optics_out.labels(), &reg);
        for i in 0..16 {
            let (a, b) = (
                optics_out.amplitude(i).norm_sqr(),
                gate_out.amplitude(i).norm_sqr(),
            );
            assert!((a - b).abs() < 1e-12, "basis {i}: {a} vs {b}");
        }
    }
}
