//! Single-photon linear optics over a `(path, polarization)` mode space.
//!
//! Mode `2·path + pol` holds the amplitude of the photon being in `path`
//! with polarization `H` (`pol = 0`) or `V` (`pol = 1`). Polarization
//! encodes one qubit and the binary digits of the path index encode the
//! others (see [`QubitMapping`]).
//!
//! Element conventions, in the `H/V` basis:
//!
//! | element | action |
//! |---|---|
//! | `Hwp(θ)` | `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]` |
//! | `Qwp(θ)` | `diag(1, i)` in the frame rotated by `θ` |
//! | `Ajwp(δ)` | `diag(1, e^{iδ})` |
//! | `Polarizer(θ)` | projector onto `cos θ|H⟩ + sin θ|V⟩` |
//! | `PhaseShift(φ)` | `e^{iφ}` on both polarizations |
//! | `Pbs(a, b)` | `H` stays, `V` amplitudes of `a` and `b` exchange |
//! | `Bs(a, b)` | `(1/√2)[[1, i], [i, 1]]` on the two path amplitudes |

mod compile;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

pub use compile::{
    aux_beam_splitters, build_cloner_train, build_setup_train, cloner_train, compile_circuit,
    compile_gate, controlled_path_rotation, input_preparation, verify_equivalence,
    EquivalenceReport,
};

use crate::error::{Error, Result};
use crate::hilbert::{bit_of, canonical_labels, q, PureState, QubitLabel, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn bit(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

/// `n_paths` spatial paths, each with an `H` and a `V` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSpace {
    n_paths: usize,
}

impl ModeSpace {
    pub fn new(n_paths: usize) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::Domain("a mode space needs at least one path".into()));
        }
        Ok(ModeSpace { n_paths })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_paths
    }

    pub fn mode(&self, path: usize, pol: Polarization) -> usize {
        2 * path + pol.bit()
    }

    fn check(&self, path: usize) -> Result<()> {
        if path < self.n_paths {
            Ok(())
        } else {
            Err(Error::InvalidPath {
                path,
                n_paths: self.n_paths,
            })
        }
    }
}

/// Photon amplitudes over the modes of a [`ModeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonState {
    space: ModeSpace,
    amps: DVector<C64>,
}

impl PhotonState {
    /// A photon in one definite mode.
    pub fn single(space: ModeSpace, path: usize, pol: Polarization) -> Result<Self> {
        space.check(path)?;
        let mut amps = DVector::from_element(space.n_modes(), ZERO);
        amps[space.mode(path, pol)] = ONE;
        Ok(PhotonState { space, amps })
    }

    pub fn from_amplitudes(space: ModeSpace, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != space.n_modes() {
            return Err(Error::Dimension {
                expected: space.n_modes(),
                found: amps.len(),
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1.0 + 1e-12 {
            return Err(Error::InvalidState(format!(
                "photon norm {norm} exceeds one"
            )));
        }
        Ok(PhotonState {
            space,
            amps: DVector::from_vec(amps),
        })
    }

    pub fn space(&self) -> ModeSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, path: usize, pol: Polarization) -> C64 {
        self.amps[self.space.mode(path, pol)]
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Probability of finding the photon in `path`, either polarization.
    pub fn path_probability(&self, path: usize) -> f64 {
        self.amplitude(path, Polarization::H).norm_sqr()
            + self.amplitude(path, Polarization::V).norm_sqr()
    }
}

/// A passive optical element acting on one or two paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    Hwp { path: usize, angle: f64 },
    Qwp { path: usize, angle: f64 },
    Ajwp { path: usize, retardance: f64 },
    Pbs { a: usize, b: usize },
    Bs { a: usize, b: usize },
    Polarizer { path: usize, angle: f64 },
    PhaseShift { path: usize, phase: f64 },
}

fn jones_hwp(angle: f64) -> [[C64; 2]; 2] {
    let (s, c) = (2.0 * angle).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(s, 0.0)],
        [C64::new(s, 0.0), C64::new(-c, 0.0)],
    ]
}

fn jones_qwp(angle: f64) -> [[C64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    let i = C64::new(0.0, 1.0);
    let off = (ONE - i) * (c * s);
    [[c * c + i * (s * s), off], [off, s * s + i * (c * c)]]
}

fn jones_polarizer(angle: f64) -> [[C64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    [
        [C64::new(c * c, 0.0), C64::new(c * s, 0.0)],
        [C64::new(c * s, 0.0), C64::new(s * s, 0.0)],
    ]
}

fn apply_jones(amps: &mut [C64], path: usize, j: [[C64; 2]; 2]) {
    let (h, v) = (amps[2 * path], amps[2 * path + 1]);
    amps[2 * path] = j[0][0] * h + j[0][1] * v;
    amps[2 * path + 1] = j[1][0] * h + j[1][1] * v;
}

impl OpticalElement {
    pub fn paths(&self) -> Vec<usize> {
        match *self {
            OpticalElement::Hwp { path, .. }
            | OpticalElement::Qwp { path, .. }
            | OpticalElement::Ajwp { path, .. }
            | OpticalElement::Polarizer { path, .. }
            | OpticalElement::PhaseShift { path, .. } => vec![path],
            OpticalElement::Pbs { a, b } | OpticalElement::Bs { a, b } => vec![a, b],
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, OpticalElement::Polarizer { .. })
    }

    /// The orientation angle of waveplates and polarizers, if any.
    pub fn axis_angle(&self) -> Option<f64> {
        match *self {
            OpticalElement::Hwp { angle, .. }
            | OpticalElement::Qwp { angle, .. }
            | OpticalElement::Polarizer { angle, .. } => Some(angle),
            _ => None,
        }
    }

    /// Same element with its orientation angle replaced.
    pub fn with_axis_angle(&self, new_angle: f64) -> Self {
        match *self {
            OpticalElement::Hwp { path, .. } => OpticalElement::Hwp {
                path,
                angle: new_angle,
            },
            OpticalElement::Qwp { path, .. } => OpticalElement::Qwp {
                path,
                angle: new_angle,
            },
            OpticalElement::Polarizer { path, .. } => OpticalElement::Polarizer {
                path,
                angle: new_angle,
            },
            other => other,
        }
    }

    fn validate(&self, space: &ModeSpace) -> Result<()> {
        for p in self.paths() {
            space.check(p)?;
        }
        if let OpticalElement::Pbs { a, b } | OpticalElement::Bs { a, b } = *self {
            if a == b {
                return Err(Error::Domain(format!("{self} needs two distinct paths")));
            }
        }
        Ok(())
    }

    fn apply_in_place(&self, amps: &mut [C64]) {
        match *self {
            OpticalElement::Hwp { path, angle } => apply_jones(amps, path, jones_hwp(angle)),
            OpticalElement::Qwp { path, angle } => apply_jones(amps, path, jones_qwp(angle)),
            OpticalElement::Ajwp { path, retardance } => {
                amps[2 * path + 1] *= C64::from_polar(1.0, retardance);
            }
            OpticalElement::Polarizer { path, angle } => {
                apply_jones(amps, path, jones_polarizer(angle))
            }
            OpticalElement::PhaseShift { path, phase } => {
                let f = C64::from_polar(1.0, phase);
                amps[2 * path] *= f;
                amps[2 * path + 1] *= f;
            }
            OpticalElement::Pbs { a, b } => amps.swap(2 * a + 1, 2 * b + 1),
            OpticalElement::Bs { a, b } => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let i = C64::new(0.0, 1.0);
                for pol in 0..2 {
                    let (xa, xb) = (amps[2 * a + pol], amps[2 * b + pol]);
                    amps[2 * a + pol] = (xa + i * xb) * r;
                    amps[2 * b + pol] = (i * xa + xb) * r;
                }
            }
        }
    }
}

impl fmt::Display for OpticalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OpticalElement::Hwp { path, angle } => write!(f, "HWP {path} {angle:.6}"),
            OpticalElement::Qwp { path, angle } => write!(f, "QWP {path} {angle:.6}"),
            OpticalElement::Ajwp { path, retardance } => write!(f, "AJWP {path} {retardance:.6}"),
            OpticalElement::Pbs { a, b } => write!(f, "PBS {a} {b}"),
            OpticalElement::Bs { a, b } => write!(f, "BS {a} {b}"),
            OpticalElement::Polarizer { path, angle } => write!(f, "POL {path} {angle:.6}"),
            OpticalElement::PhaseShift { path, phase } => write!(f, "PHASE {path} {phase:.6}"),
        }
    }
}

impl FromStr for OpticalElement {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("cannot parse optical element {line:?}"));
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [kind, first, second] = fields.as_slice() else {
            return Err(bad());
        };
        let path: usize = first.parse().map_err(|_| bad())?;
        let real = || second.parse::<f64>().map_err(|_| bad());
        let other = || second.parse::<usize>().map_err(|_| bad());
        Ok(match *kind {
            "HWP" => OpticalElement::Hwp {
                path,
                angle: real()?,
            },
            "QWP" => OpticalElement::Qwp {
                path,
                angle: real()?,
            },
            "AJWP" => OpticalElement::Ajwp {
                path,
                retardance: real()?,
            },
            "POL" => OpticalElement::Polarizer {
                path,
                angle: real()?,
            },
            "PHASE" => OpticalElement::PhaseShift {
                path,
                phase: real()?,
            },
            "PBS" => OpticalElement::Pbs {
                a: path,
                b: other()?,
            },
            "BS" => OpticalElement::Bs {
                a: path,
                b: other()?,
            },
            _ => return Err(bad()),
        })
    }
}

/// Matrix of one element over all modes of `space`.
pub fn element_matrix(element: &OpticalElement, space: &ModeSpace) -> Result<DMatrix<C64>> {
    element.validate(space)?;
    let n = space.n_modes();
    let mut m = DMatrix::from_element(n, n, ZERO);
    for col in 0..n {
        let mut v = vec![ZERO; n];
        v[col] = ONE;
        element.apply_in_place(&mut v);
        m.set_column(col, &DVector::from_vec(v));
    }
    Ok(m)
}

/// An ordered sequence of elements over a fixed mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalTrain {
    space: ModeSpace,
    elements: Vec<OpticalElement>,
}

impl OpticalTrain {
    pub fn new(space: ModeSpace) -> Self {
        OpticalTrain {
            space,
            elements: Vec::new(),
        }
    }

    pub fn push(&mut self, element: OpticalElement) -> Result<&mut Self> {
        element.validate(&self.space)?;
        self.elements.push(element);
        Ok(self)
    }

    pub fn extend<I: IntoIterator<Item = OpticalElement>>(
        &mut self,
        elements: I,
    ) -> Result<&mut Self> {
        for e in elements {
            self.push(e)?;
        }
        Ok(self)
    }

    /// Appends every element of `other`, which must share the mode space.
    pub fn append(&mut self, other: &OpticalTrain) -> Result<&mut Self> {
        if other.space != self.space {
            return Err(Error::Dimension {
                expected: self.space.n_modes(),
                found: other.space.n_modes(),
            });
        }
        self.elements.extend_from_slice(&other.elements);
        Ok(self)
    }

    pub fn space(&self) -> ModeSpace {
        self.space
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_lossless(&self) -> bool {
        self.elements.iter().all(OpticalElement::is_unitary)
    }

    /// Sends `state` through the elements in order.
    pub fn apply(&self, state: &PhotonState) -> Result<PhotonState> {
        if state.space != self.space {
            return Err(Error::Dimension {
                expected: self.space.n_modes(),
                found: state.space.n_modes(),
            });
        }
        let mut amps: Vec<C64> = state.amps.iter().copied().collect();
        for e in &self.elements {
            e.apply_in_place(&mut amps);
        }
        Ok(PhotonState {
            space: self.space,
            amps: DVector::from_vec(amps),
        })
    }

    /// Composite mode matrix, first element applied first.
    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.space.n_modes();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for col in 0..n {
            let mut v = vec![ZERO; n];
            v[col] = ONE;
            for e in &self.elements {
                e.apply_in_place(&mut v);
            }
            m.set_column(col, &DVector::from_vec(v));
        }
        m
    }

    /// Copy with every waveplate and polarizer orientation passed through `f`.
    pub fn map_axis_angles<F: FnMut(f64) -> f64>(&self, mut f: F) -> OpticalTrain {
        let elements = self
            .elements
            .iter()
            .map(|e| match e.axis_angle() {
                Some(a) => e.with_axis_angle(f(a)),
                None => *e,
            })
            .collect();
        OpticalTrain {
            space: self.space,
            elements,
        }
    }

    /// Copy with the orientation of element `index` offset by `delta`.
    pub fn with_angle_offset(&self, index: usize, delta: f64) -> Result<OpticalTrain> {
        let e = self
            .elements
            .get(index)
            .ok_or_else(|| Error::Domain(format!("train has no element {index}")))?;
        let angle = e
            .axis_angle()
            .ok_or_else(|| Error::Domain(format!("element {index} ({e}) has no axis angle")))?;
        let mut out = self.clone();
        out.elements[index] = e.with_axis_angle(angle + delta);
        Ok(out)
    }

    /// Plain-text listing, one element per line after a `# paths N` header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# paths {}\n", self.space.n_paths);
        for e in &self.elements {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut space = None;
        let mut elements = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(n) = rest.trim().strip_prefix("paths") {
                    let n = n
                        .trim()
                        .parse()
                        .map_err(|_| Error::Domain(format!("bad path count in {line:?}")))?;
                    space = Some(ModeSpace::new(n)?);
                }
                continue;
            }
            elements.push(line.parse::<OpticalElement>()?);
        }
        let space = space.ok_or_else(|| Error::Domain("missing '# paths N' header".into()))?;
        let mut train = OpticalTrain::new(space);
        train.extend(elements)?;
        Ok(train)
    }
}

/// Free-function form of [`OpticalTrain::apply`].
pub fn apply_train(train: &OpticalTrain, state: &PhotonState) -> Result<PhotonState> {
    train.apply(state)
}

/// How modes are read as qubits: polarization is one qubit (`H = 0`) and
/// the binary digits of the path index, most significant first, are the
/// others.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitMapping {
    pub polarization: QubitLabel,
    pub path_bits: Vec<QubitLabel>,
}

impl QubitMapping {
    /// Polarization is qubit 1; path bits are qubit 2 (2 paths), qubits 2, 3
    /// (4 paths) or aux, 2, 3 (8 paths).
    pub fn standard(n_paths: usize) -> Result<Self> {
        let path_bits = match n_paths {
            1 => vec![],
            2 => vec![q(2)],
            4 => vec![q(2), q(3)],
            8 => vec![QubitLabel::AUX, q(2), q(3)],
            _ => {
                return Err(Error::Domain(format!(
                    "no standard qubit mapping for {n_paths} paths"
                )))
            }
        };
        Ok(QubitMapping {
            polarization: q(1),
            path_bits,
        })
    }

    pub fn n_paths(&self) -> usize {
        1 << self.path_bits.len()
    }

    /// Canonical register of all mapped qubits.
    pub fn register(&self) -> Result<Vec<QubitLabel>> {
        let mut labels = vec![self.polarization];
        labels.extend_from_slice(&self.path_bits);
        canonical_labels(&labels)
    }

    /// Mask selecting `label`'s digit in a path index.
    pub fn path_mask(&self, label: QubitLabel) -> Option<usize> {
        let k = self.path_bits.len();
        self.path_bits
            .iter()
            .position(|&l| l == label)
            .map(|j| 1usize << (k - 1 - j))
    }

    /// Qubit-basis index of mode `(path, pol)`.
    pub fn qubit_index(&self, path: usize, pol: usize) -> Result<usize> {
        let register = self.register()?;
        let mut idx = pol << bit_of(&register, self.polarization)?;
        let k = self.path_bits.len();
        for (j, &label) in self.path_bits.iter().enumerate() {
            if (path >> (k - 1 - j)) & 1 == 1 {
                idx |= 1 << bit_of(&register, label)?;
            }
        }
        Ok(idx)
    }

    /// `perm[mode] = qubit index`.
    fn permutation(&self) -> Result<Vec<usize>> {
        (0..2 * self.n_paths())
            .map(|m| self.qubit_index(m / 2, m % 2))
            .collect()
    }
}

/// Relabels a lossless photon state as a multi-qubit pure state.
pub fn modes_to_qubits(state: &PhotonState, mapping: &QubitMapping) -> Result<PureState> {
    if mapping.n_paths() != state.space.n_paths() {
        return Err(Error::Dimension {
            expected: 2 * mapping.n_paths(),
            found: state.space.n_modes(),
        });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::LossyTrain { norm });
    }
    let perm = mapping.permutation()?;
    let mut amps = vec![ZERO; perm.len()];
    for (mode, &qi) in perm.iter().enumerate() {
        amps[qi] = state.amps[mode];
    }
    let register = mapping.register()?;
    Ok(PureState::from_parts_unchecked(
        register,
        DVector::from_vec(amps),
    ))
}

/// Inverse of [`modes_to_qubits`].
pub fn qubits_to_modes(state: &PureState, mapping: &QubitMapping) -> Result<PhotonState> {
    let register = mapping.register()?;
    if state.labels() != register.as_slice() {
        return Err(Error::Labeling(format!(
            "state register {:?} does not match mapping {:?}",
            state.labels(),
            register
        )));
    }
    let perm = mapping.permutation()?;
    let amps: Vec<C64> = perm.iter().map(|&qi| state.amplitude(qi)).collect();
    PhotonState::from_amplitudes(ModeSpace::new(mapping.n_paths())?, amps)
}

/// Mode matrix of `train` rewritten in the qubit basis of `mapping`.
pub fn train_unitary_in_qubits(
    train: &OpticalTrain,
    mapping: &QubitMapping,
) -> Result<DMatrix<C64>> {
    if mapping.n_paths() != train.space.n_paths() {
        return Err(Error::Dimension {
            expected: 2 * mapping.n_paths(),
            found: train.space.n_modes(),
        });
    }
    let perm = mapping.permutation()?;
    let m = train.matrix();
    let n = perm.len();
    let mut out = DMatrix::from_element(n, n, ZERO);
    for r in 0..n {
        for c in 0..n {
            out[(perm[r], perm[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::unitarity_defect;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn space(n: usize) -> ModeSpace {
        ModeSpace::new(n).unwrap()
    }

    #[test]
    fn hwp_at_45_degrees_flips_h_to_v() {
        let s = space(1);
        let mut t = OpticalTrain::new(s);
        t.push(OpticalElement::Hwp {
            path: 0,
            angle: FRAC_PI_4,
        })
        .unwrap();
        let out = t
            .apply(&PhotonState::single(s, 0, Polarization::H).unwrap())
            .unwrap();
        assert!(out.amplitude(0, Polarization::H).norm() < 1e-15);
        assert!((out.amplitude(0, Polarization::V) - ONE).norm() < 1e-15);
    }

    #[test]
    fn hwp_at_22_5_degrees_makes_diagonal() {
        let s = space(1);
        let mut t = OpticalTrain::new(s);
        t.push(OpticalElement::Hwp {
            path: 0,
            angle: FRAC_PI_8,
        })
        .unwrap();
        let out = t
            .apply(&PhotonState::single(s, 0, Polarization::H).unwrap())
            .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude(0, Polarization::H).re - h).abs() < 1e-15);
        assert!((out.amplitude(0, Polarization::V).re - h).abs() < 1e-15);
    }

    #[test]
    fn beam_splitter_is_balanced() {
        let s = space(2);
        let mut t = OpticalTrain::new(s);
        t.push(OpticalElement::Bs { a: 0, b: 1 }).unwrap();
        let out = t
            .apply(&PhotonState::single(s, 0, Polarization::V).unwrap())
            .unwrap();
        assert!((out.path_probability(0) - 0.5).abs() < 1e-15);
        assert!((out.path_probability(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_pbs_crossings_cancel() {
        let s = space(2);
        let mut t = OpticalTrain::new(s);
        t.push(OpticalElement::Pbs { a: 0, b: 1 }).unwrap();
        t.push(OpticalElement::Pbs { a: 0, b: 1 }).unwrap();
        assert_eq!(t.matrix(), DMatrix::identity(4, 4));
        // a single crossing sends V to the other path and leaves H
        let mut one = OpticalTrain::new(s);
        one.push(OpticalElement::Pbs { a: 0, b: 1 }).unwrap();
        let m = one.matrix();
        assert_eq!(m[(0, 0)], ONE);
        assert_eq!(m[(3, 1)], ONE);
    }

    #[test]
    fn aligned_polarizer_is_transparent() {
        let s = space(1);
        let mut t = OpticalTrain::new(s);
        t.push(OpticalElement::Hwp {
            path: 0,
            angle: 0.3,
        })
        .unwrap();
        let prepared = t
            .apply(&PhotonState::single(s, 0, Polarization::H).unwrap())
            .unwrap();
        // H after a HWP at 0.3 is linear polarization at 0.6
        let mut pol = OpticalTrain::new(s);
        pol.push(OpticalElement::Polarizer {
            path: 0,
            angle: 0.6,
        })
        .unwrap();
        assert!((pol.apply(&prepared).unwrap().norm() - 1.0).abs() < 1e-12);
        let mut crossed = OpticalTrain::new(s);
        crossed
            .push(OpticalElement::Polarizer {
                path: 0,
                angle: 0.6 + std::f64::consts::FRAC_PI_2,
            })
            .unwrap();
        assert!(crossed.apply(&prepared).unwrap().norm() < 1e-12);
    }

    #[test]
    fn unitary_elements_are_unitary() {
        let s = space(3);
        let elems = [
            OpticalElement::Hwp {
                path: 1,
                angle: 0.37,
            },
            OpticalElement::Qwp {
                path: 2,
                angle: -1.1,
            },
            OpticalElement::Ajwp {
                path: 0,
                retardance: 2.2,
            },
            OpticalElement::Pbs { a: 0, b: 2 },
            OpticalElement::Bs { a: 2, b: 1 },
            OpticalElement::PhaseShift {
                path: 1,
                phase: 0.9,
            },
        ];
        for e in elems {
            assert!(
                unitarity_defect(&element_matrix(&e, &s).unwrap()) < 1e-12,
                "{e}"
            );
        }
        let p = element_matrix(
            &OpticalElement::Polarizer {
                path: 0,
                angle: 0.2,
            },
            &s,
        )
        .unwrap();
        assert!(unitarity_defect(&p) > 0.5);
    }

    #[test]
    fn qwp_convention() {
        let m = element_matrix(
            &OpticalElement::Qwp {
                path: 0,
                angle: 0.0,
            },
            &space(1),
        )
        .unwrap();
        assert_eq!(m[(0, 0)], ONE);
        assert!((m[(1, 1)] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn invalid_paths_rejected() {
        let mut t = OpticalTrain::new(space(2));
        assert!(matches!(
            t.push(OpticalElement::Hwp {
                path: 2,
                angle: 0.0
            }),
            Err(Error::InvalidPath { .. })
        ));
        assert!(t.push(OpticalElement::Pbs { a: 1, b: 1 }).is_err());
        assert!(element_matrix(&OpticalElement::Bs { a: 0, b: 5 }, &space(2)).is_err());
    }

    #[test]
    fn empty_train_leaves_photon() {
        let s = space(4);
        let p = PhotonState::single(s, 3, Polarization::V).unwrap();
        assert_eq!(OpticalTrain::new(s).apply(&p).unwrap(), p);
    }

    #[test]
    fn mode_space_mismatch() {
        let t = OpticalTrain::new(space(2));
        let p = PhotonState::single(space(4), 0, Polarization::H).unwrap();
        assert!(matches!(t.apply(&p), Err(Error::Dimension { .. })));
    }

    #[test]
    fn mapping_examples() {
        let m4 = QubitMapping::standard(4).unwrap();
        let s = space(4);
        let a = modes_to_qubits(&PhotonState::single(s, 0, Polarization::H).unwrap(), &m4).unwrap();
        assert_eq!(
            a,
            PureState::basis(&[q(1), q(2), q(3)], &[0, 0, 0]).unwrap()
        );
        let b = modes_to_qubits(&PhotonState::single(s, 1, Polarization::V).unwrap(), &m4).unwrap();
        assert_eq!(
            b,
            PureState::basis(&[q(1), q(2), q(3)], &[1, 0, 1]).unwrap()
        );

        let m8 = QubitMapping::standard(8).unwrap();
        let c = modes_to_qubits(
            &PhotonState::single(space(8), 6, Polarization::H).unwrap(),
            &m8,
        )
        .unwrap();
        assert_eq!(
            c,
            PureState::basis(&[QubitLabel::AUX, q(1), q(2), q(3)], &[1, 0, 1, 0]).unwrap()
        );
        assert!(QubitMapping::standard(3).is_err());
    }

    #[test]
    fn lossy_state_cannot_be_mapped() {
        let s = space(2);
        let mut t = OpticalTrain::new(s);
        t.push(OpticalElement::Polarizer {
            path: 0,
            angle: 1.0,
        })
        .unwrap();
        let out = t
            .apply(&PhotonState::single(s, 0, Polarization::H).unwrap())
            .unwrap();
        let err = modes_to_qubits(&out, &QubitMapping::standard(2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::LossyTrain { .. }));
    }

    #[test]
    fn text_listing() {
        let mut t = OpticalTrain::new(space(2));
        t.extend([
            OpticalElement::Hwp {
                path: 0,
                angle: FRAC_PI_4,
            },
            OpticalElement::Pbs { a: 0, b: 1 },
            OpticalElement::PhaseShift {
                path: 1,
                phase: -1.0,
            },
        ])
        .unwrap();
        assert_eq!(
            t.to_text(),
            "# paths 2\nHWP 0 0.785398\nPBS 0 1\nPHASE 1 -1.000000\n"
        );
        let back = OpticalTrain::from_text(&t.to_text()).unwrap();
        assert_eq!(back.to_text(), t.to_text());
        assert!(OpticalTrain::from_text("HWP 0 1.0\n").is_err());
        assert!(OpticalTrain::from_text("# paths 2\nMIRROR 0 1\n").is_err());
    }

    #[test]
    fn angle_offset_hook() {
        let mut t = OpticalTrain::new(space(1));
        t.push(OpticalElement::Hwp {
            path: 0,
            angle: 0.1,
        })
        .unwrap();
        t.push(OpticalElement::Pbs { a: 0, b: 0 }).unwrap_err();
        let shifted = t.with_angle_offset(0, 0.5).unwrap();
        assert_eq!(shifted.elements()[0].axis_angle(), Some(0.6));
        assert!(t.with_angle_offset(3, 0.1).is_err());
    }
}
