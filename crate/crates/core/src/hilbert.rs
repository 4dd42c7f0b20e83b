//! Labeled multi-qubit states and density matrices.
//!
//! A register is a set of [`QubitLabel`]s kept in ascending order. The
//! smallest label is the most significant bit of the basis index, and the
//! auxiliary qubit sorts before every numbered qubit, so `|a⟩_aux |b c d⟩_123`
//! has basis index `8a + 4b + 2c + d`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default absolute tolerance for normalization, hermiticity and trace.
pub const TOLERANCE: f64 = 1e-12;

/// Eigenvalue floor accepted as positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Identifies a qubit inside a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitLabel(u8);

impl QubitLabel {
    /// The auxiliary qubit used by the measurement stage.
    pub const AUX: QubitLabel = QubitLabel(0);

    /// A numbered qubit. Label `0` is reserved for [`QubitLabel::AUX`].
    pub const fn new(index: u8) -> Self {
        assert!(index > 0, "qubit index 0 is reserved for aux");
        QubitLabel(index)
    }

    pub fn is_aux(self) -> bool {
        self.0 == 0
    }

    pub fn index(self) -> u8 {
        self.0
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_aux() {
            write!(f, "aux")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Shorthand for `QubitLabel::new`.
pub const fn q(index: u8) -> QubitLabel {
    QubitLabel::new(index)
}

/// Returns the labels sorted, or a labeling error on duplicates / emptiness.
pub(crate) fn canonical_labels(labels: &[QubitLabel]) -> Result<Vec<QubitLabel>> {
    if labels.is_empty() {
        return Err(Error::Labeling("empty register".into()));
    }
    let mut sorted = labels.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Labeling(format!("duplicate labels in {labels:?}")));
    }
    Ok(sorted)
}

/// Bit position (counted from the least significant bit) of `label` in a
/// canonical register.
pub(crate) fn bit_of(register: &[QubitLabel], label: QubitLabel) -> Result<usize> {
    register
        .iter()
        .position(|&l| l == label)
        .map(|p| register.len() - 1 - p)
        .ok_or_else(|| Error::Labeling(format!("qubit {label} not in register {register:?}")))
}

/// Re-indexes amplitudes given in `order` into the canonical (sorted) order.
fn to_canonical(order: &[QubitLabel], amps: &[C64]) -> (Vec<QubitLabel>, Vec<C64>) {
    let mut sorted = order.to_vec();
    sorted.sort();
    if sorted == order {
        return (sorted, amps.to_vec());
    }
    let n = order.len();
    // bit position in the sorted register for each position of `order`
    let target_bits: Vec<usize> = order
        .iter()
        .map(|l| n - 1 - sorted.iter().position(|s| s == l).unwrap())
        .collect();
    let mut out = vec![ZERO; amps.len()];
    for (idx, &a) in amps.iter().enumerate() {
        let mut new_idx = 0;
        for (pos, &tb) in target_bits.iter().enumerate() {
            if idx >> (n - 1 - pos) & 1 == 1 {
                new_idx |= 1 << tb;
            }
        }
        out[new_idx] = a;
    }
    (sorted, out)
}

/// A normalized pure state over a labeled register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    labels: Vec<QubitLabel>,
    amps: DVector<C64>,
}

impl PureState {
    /// Builds a state from amplitudes indexed with `labels[0]` as the most
    /// significant bit. The labels may be given in any order; the result is
    /// stored in canonical order.
    pub fn new(labels: &[QubitLabel], amplitudes: Vec<C64>) -> Result<Self> {
        canonical_labels(labels)?;
        let dim = 1usize << labels.len();
        if amplitudes.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidState(format!(
                "amplitudes have squared norm {norm_sqr}"
            )));
        }
        let (labels, amps) = to_canonical(labels, &amplitudes);
        Ok(PureState {
            labels,
            amps: DVector::from_vec(amps),
        })
    }

    /// Like [`PureState::new`] but rescales the amplitudes to unit norm.
    pub fn normalized(labels: &[QubitLabel], amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite norm".into()));
        }
        Self::new(labels, amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// Real amplitudes, normalized.
    pub fn from_real(labels: &[QubitLabel], amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(
            labels,
            amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect(),
        )
    }

    /// The computational basis state with the given bit string (one bit per
    /// label, in the order of `labels`).
    pub fn basis(labels: &[QubitLabel], bits: &[u8]) -> Result<Self> {
        if bits.len() != labels.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                found: bits.len(),
            });
        }
        let idx = bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        let mut amps = vec![ZERO; 1 << labels.len()];
        amps[idx] = ONE;
        Self::new(labels, amps)
    }

    /// `α|0⟩ + β|1⟩` on a single qubit.
    pub fn qubit(label: QubitLabel, alpha: C64, beta: C64) -> Result<Self> {
        Self::new(&[label], vec![alpha, beta])
    }

    /// `cos θ |0⟩ + e^{iδ} sin θ |1⟩`. Any finite angles are accepted.
    pub fn from_angles(label: QubitLabel, theta: f64, delta: f64) -> Self {
        let amps = vec![
            C64::new(theta.cos(), 0.0),
            C64::from_polar(theta.sin(), delta),
        ];
        PureState {
            labels: vec![label],
            amps: DVector::from_vec(amps),
        }
    }

    /// A Haar-random state on the given register.
    pub fn random<R: Rng + ?Sized>(labels: &[QubitLabel], rng: &mut R) -> Result<Self> {
        let dim = 1usize << labels.len();
        // Gaussian components via Box-Muller give a unitarily invariant vector.
        let amps: Vec<C64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.random();
                let r = (-2.0 * u1.ln()).sqrt();
                C64::from_polar(r, std::f64::consts::TAU * u2)
            })
            .collect();
        Self::normalized(labels, amps)
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<QubitLabel>, amps: DVector<C64>) -> Self {
        PureState { labels, amps }
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.labels != other.labels {
            return Err(Error::Labeling(format!(
                "registers differ: {:?} vs {:?}",
                self.labels, other.labels
            )));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|`, the global-phase-insensitive overlap.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// Largest elementwise deviation after aligning the global phase of
    /// `other` to `self`.
    pub fn max_deviation_up_to_phase(&self, other: &PureState) -> Result<f64> {
        let ip = self.inner(other)?;
        let phase = if ip.norm() > 0.0 {
            ip.conj() / ip.norm()
        } else {
            ONE
        };
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max))
    }

    /// Reduced state of one qubit, computed directly from the amplitudes.
    pub fn reduced_qubit(&self, label: QubitLabel) -> Result<DensityMatrix> {
        let m = 1usize << bit_of(&self.labels, label)?;
        let mut rho = DMatrix::from_element(2, 2, ZERO);
        for i in (0..self.dim()).filter(|i| i & m == 0) {
            let (a0, a1) = (self.amps[i], self.amps[i | m]);
            rho[(0, 0)] += a0 * a0.conj();
            rho[(1, 1)] += a1 * a1.conj();
            rho[(1, 0)] += a1 * a0.conj();
        }
        rho[(0, 1)] = rho[(1, 0)].conj();
        Ok(DensityMatrix {
            labels: vec![label],
            matrix: rho,
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            labels: self.labels.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }
}

/// `a ⊗ b`, re-ordered to the canonical register of the combined labels.
pub fn tensor_product(a: &PureState, b: &PureState) -> Result<PureState> {
    if a.labels.iter().any(|l| b.labels.contains(l)) {
        return Err(Error::Labeling(format!(
            "overlapping registers {:?} and {:?}",
            a.labels, b.labels
        )));
    }
    let mut order = a.labels.clone();
    order.extend_from_slice(&b.labels);
    let mut amps = Vec::with_capacity(a.dim() * b.dim());
    for x in a.amps.iter() {
        for y in b.amps.iter() {
            amps.push(x * y);
        }
    }
    let (labels, amps) = to_canonical(&order, &amps);
    Ok(PureState::from_parts_unchecked(
        labels,
        DVector::from_vec(amps),
    ))
}

/// A density matrix over a labeled register: Hermitian, trace one and
/// positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    labels: Vec<QubitLabel>,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates and wraps a matrix given in canonical label order.
    pub fn new(labels: &[QubitLabel], matrix: DMatrix<C64>) -> Result<Self> {
        let labels = canonical_labels(labels)?;
        let dim = 1usize << labels.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let herm_err = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_err > TOLERANCE {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm_err:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace - ONE).norm() > TOLERANCE {
            return Err(Error::InvalidState(format!("trace {trace} is not one")));
        }
        let rho = DensityMatrix { labels, matrix };
        let min_eig = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < PSD_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    /// The maximally mixed state.
    pub fn maximally_mixed(labels: &[QubitLabel]) -> Result<Self> {
        let labels = canonical_labels(labels)?;
        let dim = 1usize << labels.len();
        let matrix = DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        Ok(DensityMatrix { labels, matrix })
    }

    /// `½(I + s_x X + s_y Y + s_z Z)` on one qubit.
    pub fn from_stokes(label: QubitLabel, s: [f64; 3]) -> Result<Self> {
        let [sx, sy, sz] = s;
        let matrix = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new((1.0 + sz) / 2.0, 0.0),
                C64::new(sx / 2.0, -sy / 2.0),
                C64::new(sx / 2.0, sy / 2.0),
                C64::new((1.0 - sz) / 2.0, 0.0),
            ],
        );
        Self::new(&[label], matrix)
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.labels.len() != other.labels.len() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    /// Returns a copy carrying a different label set of the same size.
    pub fn relabeled(&self, labels: &[QubitLabel]) -> Result<Self> {
        let canon = canonical_labels(labels)?;
        if canon.len() != self.labels.len() {
            return Err(Error::Dimension {
                expected: self.labels.len(),
                found: canon.len(),
            });
        }
        Ok(DensityMatrix {
            labels: canon,
            matrix: self.matrix.clone(),
        })
    }

    /// Reduced density matrix on `keep`.
    pub fn partial_trace(&self, keep: &[QubitLabel]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Labeling("nothing to keep".into()));
        }
        let keep = canonical_labels(keep)?;
        let n = self.labels.len();
        let keep_bits: Vec<usize> = keep
            .iter()
            .map(|&l| bit_of(&self.labels, l))
            .collect::<Result<_>>()?;
        let dim = self.dim();
        let k = keep.len();
        let kept_mask: usize = keep_bits.iter().map(|b| 1usize << b).sum();
        // index of the kept subsystem, most significant kept label first
        let kept_index = |x: usize| {
            keep_bits
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | ((x >> b) & 1))
        };
        debug_assert!(k <= n);
        let mut out = DMatrix::from_element(1 << k, 1 << k, ZERO);
        for x in 0..dim {
            for y in 0..dim {
                if x & !kept_mask == y & !kept_mask {
                    out[(kept_index(x), kept_index(y))] += self.matrix[(x, y)];
                }
            }
        }
        Ok(DensityMatrix {
            labels: keep,
            matrix: out,
        })
    }

    /// Stokes vector `(s_x, s_y, s_z)` of a single-qubit matrix.
    pub fn stokes(&self) -> Result<[f64; 3]> {
        if self.labels.len() != 1 {
            return Err(Error::Dimension {
                expected: 2,
                found: self.dim(),
            });
        }
        let m = &self.matrix;
        Ok([
            2.0 * m[(1, 0)].re,
            2.0 * m[(1, 0)].im,
            (m[(0, 0)] - m[(1, 1)]).re,
        ])
    }
}

/// `⟨ψ|ρ|ψ⟩`. Register sizes must agree; labels need not.
pub fn fidelity(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::Dimension {
            expected: rho.dim(),
            found: psi.dim(),
        });
    }
    let value = psi.amps.dotc(&(&rho.matrix * &psi.amps));
    debug_assert!(value.im.abs() < 1e-9);
    Ok(value.re)
}

/// Free-function form of [`DensityMatrix::partial_trace`].
pub fn partial_trace(rho: &DensityMatrix, keep: &[QubitLabel]) -> Result<DensityMatrix> {
    rho.partial_trace(keep)
}

/// Free-function form of [`DensityMatrix::stokes`].
pub fn stokes_decompose(rho: &DensityMatrix) -> Result<[f64; 3]> {
    rho.stokes()
}

/// `max |U†U − I|` over entries.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
