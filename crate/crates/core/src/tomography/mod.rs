//! Measurement of the two replicas: auxiliary-qubit controlled swap, the
//! eight-path detector distribution, count simulation and single-qubit
//! tomography by linear inversion.
//!
//! The four paths with the auxiliary qubit in `|0⟩` (paths 0–3) carry
//! replica 1 in their polarization; after the controlled swap the paths
//! 4–7 carry replica 2.

mod counts;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use counts::{resample, simulate_counts, CountsRecord, DetectorModel};

use crate::error::{Error, Result};
use crate::hilbert::{
    fidelity, q, tensor_product, DensityMatrix, PureState, QubitLabel, C64, ZERO,
};
use crate::network::{aux_preparation, build_network, Circuit, Gate, ANCILLA, COPY, ORIGINAL};
use crate::optics::{
    build_setup_train, ModeSpace, OpticalElement, OpticalTrain, PhotonState, Polarization,
};

pub const N_PATHS: usize = 8;

/// `table[path][basis]` with basis order `H, V, D, R`: detection
/// probabilities or (background-corrected) counts.
pub type CountTable = [[f64; 4]; N_PATHS];

/// Analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementBasis {
    H,
    V,
    D,
    R,
}

impl MeasurementBasis {
    pub const ALL: [MeasurementBasis; 4] = [Self::H, Self::V, Self::D, Self::R];

    /// The state the analyzer passes, `(⟨0|b⟩, ⟨1|b⟩)`.
    pub fn state(self) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            Self::H => [C64::new(1.0, 0.0), ZERO],
            Self::V => [ZERO, C64::new(1.0, 0.0)],
            Self::D => [C64::new(h, 0.0), C64::new(h, 0.0)],
            Self::R => [C64::new(h, 0.0), C64::new(0.0, h)],
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::H => "H",
            Self::V => "V",
            Self::D => "D",
            Self::R => "R",
        };
        f.write_str(s)
    }
}

/// Polarization analyzer placed on every path in front of the detectors:
/// a polarizer, preceded by a quarter-wave plate for `R`.
pub fn analyzer_train(space: ModeSpace, basis: MeasurementBasis) -> Result<OpticalTrain> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let mut t = OpticalTrain::new(space);
    for path in 0..space.n_paths() {
        match basis {
            MeasurementBasis::H => t.push(OpticalElement::Polarizer { path, angle: 0.0 })?,
            MeasurementBasis::V => t.push(OpticalElement::Polarizer {
                path,
                angle: FRAC_PI_2,
            })?,
            MeasurementBasis::D => t.push(OpticalElement::Polarizer {
                path,
                angle: FRAC_PI_4,
            })?,
            MeasurementBasis::R => t.push(OpticalElement::Qwp { path, angle: 0.0 })?.push(
                OpticalElement::Polarizer {
                    path,
                    angle: -FRAC_PI_4,
                },
            )?,
        };
    }
    Ok(t)
}

/// Which clone a reconstruction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replica {
    One,
    Two,
}

impl Replica {
    fn paths(self) -> std::ops::Range<usize> {
        match self {
            Replica::One => 0..4,
            Replica::Two => 4..8,
        }
    }
}

/// Adds the auxiliary qubit in `(|0⟩ + |1⟩)/√2` and swaps qubits 1 and 2
/// when it is `|1⟩`.
pub fn attach_aux_cswap(out3: &PureState) -> Result<PureState> {
    if out3.labels() != [ORIGINAL, COPY, ANCILLA] {
        return Err(Error::Labeling(format!(
            "expected a state on qubits 1, 2, 3, got {:?}",
            out3.labels()
        )));
    }
    let aux = PureState::basis(&[QubitLabel::AUX], &[0])?;
    let reg = [QubitLabel::AUX, ORIGINAL, COPY, ANCILLA];
    let c = Circuit::with_gates(
        &reg,
        &[
            aux_preparation(),
            Gate::cswap(QubitLabel::AUX, ORIGINAL, COPY),
        ],
    )?;
    c.apply(&tensor_product(&aux, out3)?)
}

/// Probabilities of `(path, outcome)` for a photon described by `meas`
/// measured with the analyzer `basis`: outcome 0 passes the analyzer,
/// outcome 1 is the orthogonal polarization. Path index is the binary
/// number (aux, qubit 2, qubit 3); polarization is qubit 1.
pub fn path_distribution(meas: &PureState, basis: MeasurementBasis) -> Result<[[f64; 2]; N_PATHS]> {
    let reg = [QubitLabel::AUX, ORIGINAL, COPY, ANCILLA];
    if meas.labels() != reg {
        return Err(Error::Labeling(format!(
            "expected a state on aux, 1, 2, 3, got {:?}",
            meas.labels()
        )));
    }
    let [b0, b1] = basis.state();
    let mut out = [[0.0; 2]; N_PATHS];
    for (path, row) in out.iter_mut().enumerate() {
        let aux = path >> 2;
        let low = path & 3;
        let (h, v) = (
            meas.amplitude(aux << 3 | low),
            meas.amplitude(aux << 3 | 4 | low),
        );
        let pass = b0.conj() * h + b1.conj() * v;
        let weight = h.norm_sqr() + v.norm_sqr();
        row[0] = pass.norm_sqr();
        row[1] = (weight - row[0]).max(0.0);
    }
    Ok(out)
}

/// Pass probabilities of all four analyzers for a four-qubit state.
pub fn detection_table(meas: &PureState) -> Result<CountTable> {
    let mut table = [[0.0; 4]; N_PATHS];
    for basis in MeasurementBasis::ALL {
        for (row, p) in table.iter_mut().zip(path_distribution(meas, basis)?) {
            row[basis.index()] = p[0];
        }
    }
    Ok(table)
}

/// Gate-level prediction for input `cos θ|0⟩ + e^{iδ} sin θ|1⟩`.
pub fn gate_detection_table(theta: f64, delta: f64) -> Result<CountTable> {
    let input = PureState::from_angles(ORIGINAL, theta, delta);
    let blanks = PureState::basis(&[COPY, ANCILLA], &[0, 0])?;
    let out = build_network()?.apply(&tensor_product(&input, &blanks)?)?;
    detection_table(&attach_aux_cswap(&out)?)
}

/// Detection probabilities of a photon entering `setup` in path 0 with
/// polarization `H`, with `analyzers[b]` in front of the detectors.
pub fn optical_table(setup: &OpticalTrain, analyzers: &[OpticalTrain; 4]) -> Result<CountTable> {
    let space = setup.space();
    if space.n_paths() != N_PATHS {
        return Err(Error::Dimension {
            expected: 2 * N_PATHS,
            found: space.n_modes(),
        });
    }
    let photon = setup.apply(&PhotonState::single(space, 0, Polarization::H)?)?;
    let mut table = [[0.0; 4]; N_PATHS];
    for (b, analyzer) in analyzers.iter().enumerate() {
        let out = analyzer.apply(&photon)?;
        for (path, row) in table.iter_mut().enumerate() {
            row[b] = out.path_probability(path);
        }
    }
    Ok(table)
}

/// Ideal analyzers for the eight-path setup.
pub fn analyzers() -> Result<[OpticalTrain; 4]> {
    let space = ModeSpace::new(N_PATHS)?;
    Ok([
        analyzer_train(space, MeasurementBasis::H)?,
        analyzer_train(space, MeasurementBasis::V)?,
        analyzer_train(space, MeasurementBasis::D)?,
        analyzer_train(space, MeasurementBasis::R)?,
    ])
}

/// Prediction of the compiled optical setup for the given input.
pub fn optical_detection_table(theta: f64, delta: f64) -> Result<CountTable> {
    optical_table(&build_setup_train(theta, delta)?, &analyzers()?)
}

/// Clips eigenvalues to `[0, 1]` and renormalizes the trace. The input must
/// be Hermitian.
pub fn physical_projection(labels: &[QubitLabel], m: &DMatrix<C64>) -> Result<DensityMatrix> {
    let eig = SymmetricEigen::new(m.clone());
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.clamp(0.0, 1.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::Reconstruction("no positive eigenvalue left".into()));
    }
    let vecs = &eig.eigenvectors;
    let mut out = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
    for (k, &l) in clipped.iter().enumerate() {
        if l > 0.0 {
            let v = vecs.column(k);
            out += v * v.adjoint() * C64::new(l / total, 0.0);
        }
    }
    // symmetrize away rounding
    let out = (&out + out.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(labels, out)
}

/// Plain linear inversion `½(I + s·σ)` from `(C_H, C_V, C_D, C_R)`. The
/// result has unit trace but may lie outside the Bloch ball.
pub fn linear_inversion(c: [f64; 4]) -> Result<DMatrix<C64>> {
    let [ch, cv, cd, cr] = c;
    let n = ch + cv;
    if !(n > 0.0) {
        return Err(Error::Reconstruction("no H or V counts".into()));
    }
    let (sx, sy, sz) = (2.0 * cd / n - 1.0, 2.0 * cr / n - 1.0, (ch - cv) / n);
    Ok(DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new((1.0 + sz) / 2.0, 0.0),
            C64::new(sx / 2.0, -sy / 2.0),
            C64::new(sx / 2.0, sy / 2.0),
            C64::new((1.0 - sz) / 2.0, 0.0),
        ],
    ))
}

fn project_if_needed(m: DMatrix<C64>) -> Result<DensityMatrix> {
    let label = [q(1)];
    let s2 = 4.0 * (m[(1, 0)].norm_sqr()) + (m[(0, 0)] - m[(1, 1)]).re.powi(2);
    if s2 <= 1.0 {
        DensityMatrix::new(&label, m)
    } else {
        physical_projection(&label, &m)
    }
}

/// Linear inversion of one path followed by the physicality projection
/// when the Stokes vector leaves the Bloch ball.
pub fn reconstruct_single_qubit(c: [f64; 4]) -> Result<DensityMatrix> {
    project_if_needed(linear_inversion(c)?)
}

/// `ρ = Σ_i Ĉ_i ρ̂_i` over the four paths of `which`, with `Ĉ_i` the share of
/// `C_H + C_V` in path `i` and `ρ̂_i` its linear inversion. Paths without
/// `H`/`V` counts carry no weight. The physicality projection is applied
/// once to the mixture: every path holds a pure polarization state, so
/// clipping each noisy `ρ̂_i` on its own would bias the fidelity downward.
pub fn reconstruct_replica(table: &CountTable, which: Replica) -> Result<DensityMatrix> {
    let rows = &table[which.paths()];
    let total: f64 = rows.iter().map(|r| r[0] + r[1]).sum();
    if !(total > 0.0) {
        return Err(Error::Reconstruction(format!(
            "no counts in the paths of replica {which:?}"
        )));
    }
    let mut m = DMatrix::from_element(2, 2, ZERO);
    for r in rows {
        let w = r[0] + r[1];
        if w > 0.0 {
            m += linear_inversion(*r)? * C64::new(w / total, 0.0);
        }
    }
    project_if_needed(m)
}

/// How the reported fidelities were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PipelineMode {
    Exact,
    MonteCarlo,
    Perturbed,
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PipelineMode::Exact => "exact",
            PipelineMode::MonteCarlo => "montecarlo",
            PipelineMode::Perturbed => "perturbed",
        })
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(PipelineMode::Exact),
            "montecarlo" => Ok(PipelineMode::MonteCarlo),
            "perturbed" => Ok(PipelineMode::Perturbed),
            _ => Err(Error::Domain(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub f1: f64,
    pub f2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub theta: f64,
    pub delta: f64,
    pub mode: PipelineMode,
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
}

/// Fidelities of both replicas with `cos θ|0⟩ + e^{iδ} sin θ|1⟩`.
pub fn fidelity_report(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    theta: f64,
    delta: f64,
    stderr: [f64; 2],
    mode: PipelineMode,
) -> Result<FidelityReport> {
    let input = PureState::from_angles(q(1), theta, delta);
    Ok(FidelityReport {
        f1: fidelity(&input, rho1)?.clamp(0.0, 1.0),
        f2: fidelity(&input, rho2)?.clamp(0.0, 1.0),
        stderr1: stderr[0].max(0.0),
        stderr2: stderr[1].max(0.0),
        theta,
        delta,
        mode,
        rho1: rho1.clone(),
        rho2: rho2.clone(),
    })
}

fn replicas_of(table: &CountTable) -> Result<(DensityMatrix, DensityMatrix)> {
    Ok((
        reconstruct_replica(table, Replica::One)?,
        reconstruct_replica(table, Replica::Two)?,
    ))
}

/// Both replicas reconstructed from the exact detection probabilities of
/// the optical setup.
pub fn exact_report(theta: f64, delta: f64) -> Result<FidelityReport> {
    let (r1, r2) = replicas_of(&optical_detection_table(theta, delta)?)?;
    fidelity_report(&r1, &r2, theta, delta, [0.0, 0.0], PipelineMode::Exact)
}

/// Number of bootstrap resamples behind Monte Carlo error bars.
pub const BOOTSTRAP_RESAMPLES: usize = 50;

/// Standard deviation of both fidelities over parametric resamples of
/// `record`, each background-corrected and reconstructed.
pub fn bootstrap_stderr(
    record: &CountsRecord,
    theta: f64,
    delta: f64,
    resamples: usize,
) -> Result<[f64; 2]> {
    let input = PureState::from_angles(q(1), theta, delta);
    let mut rng = ChaCha8Rng::seed_from_u64(record.seed);
    rng.set_stream(u64::MAX);
    let mut samples = [Vec::with_capacity(resamples), Vec::with_capacity(resamples)];
    for _ in 0..resamples {
        let (r1, r2) = replicas_of(&resample(record, &mut rng).signal_table())?;
        samples[0].push(fidelity(&input, &r1)?);
        samples[1].push(fidelity(&input, &r2)?);
    }
    Ok(samples.map(|s| std_dev(&s)))
}

pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Simulated counts for the optical setup, reconstructed after background
/// subtraction, with bootstrap error bars.
pub fn monte_carlo_report(
    theta: f64,
    delta: f64,
    model: &DetectorModel,
    trials: u64,
    seed: u64,
) -> Result<FidelityReport> {
    let record = simulate_counts(&optical_detection_table(theta, delta)?, model, trials, seed)?;
    let (r1, r2) = replicas_of(&record.signal_table())?;
    let stderr = bootstrap_stderr(&record, theta, delta, BOOTSTRAP_RESAMPLES)?;
    fidelity_report(&r1, &r2, theta, delta, stderr, PipelineMode::MonteCarlo)
}

/// Fidelities only, without error bars. Cheaper than [`monte_carlo_report`]
/// when many seeds are run.
pub fn monte_carlo_fidelities(
    table: &CountTable,
    theta: f64,
    delta: f64,
    model: &DetectorModel,
    trials: u64,
    seed: u64,
) -> Result<[f64; 2]> {
    let record = simulate_counts(table, model, trials, seed)?;
    let (r1, r2) = replicas_of(&record.signal_table())?;
    let input = PureState::from_angles(q(1), theta, delta);
    Ok([fidelity(&input, &r1)?, fidelity(&input, &r2)?])
}
