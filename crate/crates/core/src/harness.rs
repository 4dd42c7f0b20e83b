//! Experiment runner behind the command-line tool: fidelity sweeps over
//! the input angles, a self-check of the whole stack and single-state
//! tomography runs.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::budget::{perturbation_sweep, PerturbationConfig, FIVE_SIXTHS};
use crate::hilbert::{q, tensor_product, DensityMatrix, PureState, QubitLabel, C64};
use crate::network::{
    bh_prep_state, bh_reference_transform, build_network, prep_gates, solve_prep_angles_with,
    swapped_measurement_circuit, Circuit, SolverOptions, ANCILLA, COPY, ORIGINAL,
};
use crate::optics::{build_setup_train, cloner_train, verify_equivalence, OpticalElement};
use crate::tomography::{
    exact_report, monte_carlo_report, reconstruct_single_qubit, simulate_counts, CountsRecord,
    DetectorModel, FidelityReport, MeasurementBasis, PipelineMode,
};

/// Largest accepted `|F − 5/6|` in exact mode.
pub const EXACT_TOLERANCE: f64 = 1e-9;
/// Reference level for systematic fidelity errors.
pub const SYSTEMATIC_REFERENCE: f64 = 0.005;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Verification(_) | HarnessError::Core(_) => 3,
            HarnessError::Io { .. } => 4,
        }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub theta_start: f64,
    pub theta_end: f64,
    pub theta_steps: usize,
    pub deltas: Vec<f64>,
    pub mode: PipelineMode,
    /// Photons per analyzer setting in Monte Carlo mode.
    pub trials: u64,
    pub seed: u64,
    /// Orientation jitter in degrees for perturbed mode.
    pub jitter_deg: f64,
    /// Total relative path-count oscillation per replica for perturbed mode.
    pub delta_c: f64,
    /// Perturbed samples per grid point.
    pub samples: usize,
    pub out: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            theta_start: -FRAC_PI_2 + PI / 36.0,
            theta_end: FRAC_PI_2,
            theta_steps: 19,
            deltas: vec![0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4],
            mode: PipelineMode::Exact,
            trials: 20_000,
            seed: 42,
            jitter_deg: 0.1,
            delta_c: 0.002,
            samples: 100,
            out: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> HarnessResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(format!("invalid value {value:?} for {key}")))
}

impl SweepConfig {
    /// Sets one `key = value` option, using the long flag names with `_` or `-`.
    pub fn set(&mut self, key: &str, value: &str) -> HarnessResult<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "theta_start" => self.theta_start = parse_num(key, value)?,
            "theta_end" => self.theta_end = parse_num(key, value)?,
            "theta_steps" => self.theta_steps = parse_num(key, value)?,
            "deltas" => {
                self.deltas = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_num(key, s))
                    .collect::<HarnessResult<_>>()?
            }
            "mode" => {
                self.mode = value
                    .parse()
                    .map_err(|_| config_err(format!("unknown mode {value:?}")))?
            }
            "trials" => self.trials = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "jitter_deg" => self.jitter_deg = parse_num(key, value)?,
            "delta_c" => self.delta_c = parse_num(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(config_err(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_file_contents(&mut self, text: &str) -> HarnessResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> HarnessResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        self.apply_file_contents(&text)
    }

    pub fn validate(&self) -> HarnessResult<()> {
        if self.theta_steps == 0 {
            return Err(config_err("theta_steps must be at least 1"));
        }
        let in_range = |t: f64| t > -FRAC_PI_2 && t <= FRAC_PI_2 + 1e-12;
        if !in_range(self.theta_start) || !in_range(self.theta_end) {
            return Err(config_err("theta range must lie in (-pi/2, pi/2]"));
        }
        if self.theta_start > self.theta_end {
            return Err(config_err("theta_start exceeds theta_end"));
        }
        if self.deltas.is_empty() {
            return Err(config_err("at least one delta is needed"));
        }
        if self.deltas.iter().any(|d| !(0.0..2.0 * PI).contains(d)) {
            return Err(config_err("deltas must lie in [0, 2pi)"));
        }
        if self.mode == PipelineMode::MonteCarlo && self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if self.mode == PipelineMode::Perturbed {
            if !(self.jitter_deg >= 0.0 && self.delta_c >= 0.0) {
                return Err(config_err("jitter and delta_c must be nonnegative"));
            }
            if self.samples == 0 {
                return Err(config_err("samples must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn theta_grid(&self) -> Vec<f64> {
        if self.theta_steps == 1 {
            return vec![self.theta_start];
        }
        let step = (self.theta_end - self.theta_start) / (self.theta_steps - 1) as f64;
        (0..self.theta_steps)
            .map(|k| {
                if k + 1 == self.theta_steps {
                    self.theta_end
                } else {
                    self.theta_start + k as f64 * step
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mode: PipelineMode,
    pub delta: f64,
    pub theta: f64,
    pub replica: u8,
    pub fidelity: f64,
    /// Bootstrap error in Monte Carlo mode, spread over samples in perturbed
    /// mode, zero in exact mode.
    pub stderr: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "mode,delta_rad,theta_rad,replica,fidelity,stderr,seed";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.9},{:.9},{},{:.9},{:.9},{}",
            self.mode, self.delta, self.theta, self.replica, self.fidelity, self.stderr, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    /// Largest `|F − 5/6|` over all rows.
    pub max_deviation: f64,
    /// Mean `|F − 5/6|` over every perturbed sample, perturbed mode only.
    pub mean_perturbed_deviation: Option<f64>,
    /// Perturbed samples beyond the analytic bound.
    pub flagged_samples: usize,
}

impl SweepOutput {
    pub fn csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv());
            s.push('\n');
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        writeln!(
            s,
            "mode {}: {} points x 2 replicas, max |F - 5/6| = {:.3e}",
            c.mode,
            self.rows.len() / 2,
            self.max_deviation
        )
        .unwrap();
        match c.mode {
            PipelineMode::Exact => {
                let ok = self.max_deviation <= EXACT_TOLERANCE;
                writeln!(
                    s,
                    "exact tolerance {EXACT_TOLERANCE:e}: {}",
                    if ok { "ok" } else { "EXCEEDED" }
                )
                .unwrap();
            }
            PipelineMode::MonteCarlo => {
                let mean_err =
                    self.rows.iter().map(|r| r.stderr).sum::<f64>() / self.rows.len() as f64;
                writeln!(
                    s,
                    "trials {} per setting, seed {}, mean bootstrap stderr {mean_err:.4}",
                    c.trials, c.seed
                )
                .unwrap();
            }
            PipelineMode::Perturbed => {
                let mean = self.mean_perturbed_deviation.unwrap_or(0.0);
                writeln!(
                    s,
                    "jitter {} deg, delta_c {}, {} samples per point: mean |dF| = {mean:.5} (reference {SYSTEMATIC_REFERENCE}), {} samples above the analytic bound",
                    c.jitter_deg, c.delta_c, c.samples, self.flagged_samples
                )
                .unwrap();
            }
        }
        s
    }

    /// Writes the CSV to `config.out` when set.
    pub fn write(&self) -> HarnessResult<()> {
        if let Some(path) = &self.config.out {
            std::fs::write(path, self.csv()).map_err(|e| HarnessError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

struct PointResult {
    rows: [SweepRow; 2],
    perturbed: Option<(f64, usize, usize)>,
}

fn run_point(
    cfg: &SweepConfig,
    index: usize,
    delta: f64,
    theta: f64,
) -> crate::Result<PointResult> {
    let point_seed = cfg.seed ^ index as u64;
    let mut perturbed = None;
    let (f, err) = match cfg.mode {
        PipelineMode::Exact => {
            let r = exact_report(theta, delta)?;
            ([r.f1, r.f2], [0.0, 0.0])
        }
        PipelineMode::MonteCarlo => {
            let r = monte_carlo_report(
                theta,
                delta,
                &DetectorModel::default(),
                cfg.trials,
                point_seed,
            )?;
            ([r.f1, r.f2], [r.stderr1, r.stderr2])
        }
        PipelineMode::Perturbed => {
            let setup = build_setup_train(theta, delta)?;
            let s = perturbation_sweep(
                &setup,
                &PerturbationConfig {
                    theta,
                    delta,
                    jitter: cfg.jitter_deg.to_radians(),
                    delta_c_total: cfg.delta_c,
                    n_samples: cfg.samples,
                    seed: point_seed,
                },
            )?;
            let n = 2 * s.fidelities.len();
            perturbed = Some((s.mean * n as f64, n, s.flagged.len()));
            (s.mean_fidelity(), s.std_fidelity())
        }
    };
    let row = |replica: usize| SweepRow {
        mode: cfg.mode,
        delta,
        theta,
        replica: replica as u8 + 1,
        fidelity: f[replica],
        stderr: err[replica],
        seed: cfg.seed,
    };
    Ok(PointResult {
        rows: [row(0), row(1)],
        perturbed,
    })
}

/// Runs every `(δ, θ)` point of the grid. Points run in parallel; rows come
/// back sorted by `(mode, δ, θ, replica)`.
pub fn run_sweep(cfg: &SweepConfig) -> HarnessResult<SweepOutput> {
    cfg.validate()?;
    let thetas = cfg.theta_grid();
    let points: Vec<(f64, f64)> = cfg
        .deltas
        .iter()
        .flat_map(|&d| thetas.iter().map(move |&t| (d, t)))
        .collect();
    let results: Vec<PointResult> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(d, t))| run_point(cfg, i, d, t))
        .collect::<crate::Result<_>>()?;

    let mut rows: Vec<SweepRow> = Vec::with_capacity(2 * results.len());
    let (mut dev_sum, mut dev_n, mut flagged) = (0.0, 0usize, 0usize);
    for r in results {
        rows.extend(r.rows);
        if let Some((sum, n, fl)) = r.perturbed {
            dev_sum += sum;
            dev_n += n;
            flagged += fl;
        }
    }
    rows.sort_by(|a, b| {
        a.mode
            .cmp(&b.mode)
            .then(a.delta.total_cmp(&b.delta))
            .then(a.theta.total_cmp(&b.theta))
            .then(a.replica.cmp(&b.replica))
    });
    let max_deviation = rows
        .iter()
        .map(|r| (r.fidelity - FIVE_SIXTHS).abs())
        .fold(0.0, f64::max);
    Ok(SweepOutput {
        config: cfg.clone(),
        rows,
        max_deviation,
        mean_perturbed_deviation: (dev_n > 0).then(|| dev_sum / dev_n as f64),
        flagged_samples: flagged,
    })
}

/// Fault injection and solver settings for [`run_verify`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    /// Offset added to the first half-wave plate of the compiled train.
    pub hwp_offset_deg: Option<f64>,
    /// Residual tolerance for the preparation-angle solver.
    pub solver_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, deviation: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Check {
            name,
            passed: deviation <= tolerance,
            deviation,
            tolerance,
            detail: detail.into(),
        }
    }

    /// `name status deviation=… tolerance=… detail`, one line.
    pub fn line(&self) -> String {
        format!(
            "{} {} deviation={:.3e} tolerance={:.1e} {}",
            self.name,
            if self.passed { "pass" } else { "fail" },
            self.deviation,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn text(&self) -> String {
        self.checks.iter().map(|c| c.line() + "\n").collect()
    }
}

fn check_reference_transform() -> crate::Result<Check> {
    let network = build_network()?;
    let blanks = PureState::basis(&[COPY, ANCILLA], &[0, 0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let n = 1000;
    for _ in 0..n {
        let psi = PureState::random(&[ORIGINAL], &mut rng)?;
        let out = network.apply(&tensor_product(&psi, &blanks)?)?;
        worst = worst.max(out.max_deviation_up_to_phase(&bh_reference_transform(&psi)?)?);
    }
    Ok(Check::new(
        "reference-transform",
        worst,
        1e-10,
        format!("inputs={n}"),
    ))
}

fn check_prep_angles(tolerance: Option<f64>) -> crate::Result<Check> {
    let mut opts = SolverOptions::default();
    if let Some(t) = tolerance {
        opts.tolerance = t;
    }
    match solve_prep_angles_with(&bh_prep_state(), &opts) {
        Ok(sol) => {
            let reg = [COPY, ANCILLA];
            let out = Circuit::with_gates(&reg, &prep_gates(&sol.angles, COPY, ANCILLA))?
                .apply(&PureState::basis(&reg, &[0, 0])?)?;
            let overlap = out.overlap(&bh_prep_state())?;
            Ok(Check::new(
                "prep-angles",
                (1.0 - overlap).max(0.0),
                1e-10,
                format!("residual={:.3e}", sol.residual),
            ))
        }
        Err(crate::Error::Solver { best_residual }) => Ok(Check::new(
            "prep-angles",
            best_residual,
            1e-10,
            format!(
                "solver tolerance {:.1e} not reached; best residual={best_residual:.3e}",
                opts.tolerance
            ),
        )),
        Err(e) => Err(e),
    }
}

fn check_optics(hwp_offset_deg: Option<f64>) -> crate::Result<Check> {
    let mut train = cloner_train()?.clone();
    let mut detail = format!("elements={}", train.len());
    if let Some(off) = hwp_offset_deg {
        let idx = train
            .elements()
            .iter()
            .position(|e| matches!(e, OpticalElement::Hwp { .. }))
            .expect("the compiled train contains half-wave plates");
        train = train.with_angle_offset(idx, off.to_radians())?;
        write!(detail, " injected_offset_deg={off} element={idx}").unwrap();
    }
    let circuit = swapped_measurement_circuit(&crate::network::bh_prep_angles()?);
    let r = verify_equivalence(&train, &circuit, 1e-9)?;
    Ok(Check::new(
        "optics-equivalence",
        r.deviation,
        r.tolerance,
        detail,
    ))
}

fn check_tomography() -> crate::Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let psi = PureState::random(&[q(1), q(2)], &mut rng)?;
        let rho = psi.reduced_qubit(q(1))?;
        let probs = MeasurementBasis::ALL.map(|b| {
            let [b0, b1] = b.state();
            let bs = PureState::qubit(q(1), b0, b1).expect("normalized basis state");
            crate::hilbert::fidelity(&bs, &rho).expect("single qubit")
        });
        worst = worst.max(reconstruct_single_qubit(probs)?.max_abs_diff(&rho)?);
    }
    Ok(Check::new(
        "tomography-roundtrip",
        worst,
        1e-12,
        "states=100",
    ))
}

fn check_exact_pipeline() -> crate::Result<Check> {
    let mut worst: f64 = 0.0;
    let cfg = SweepConfig::default();
    for &d in &cfg.deltas {
        for &t in cfg.theta_grid().iter().step_by(3) {
            let r = exact_report(t, d)?;
            worst = worst
                .max((r.f1 - FIVE_SIXTHS).abs())
                .max((r.f2 - FIVE_SIXTHS).abs());
        }
    }
    Ok(Check::new("exact-fidelity", worst, 1e-10, "replicas=both"))
}

/// Runs the consistency checks of the whole stack.
pub fn run_verify(opts: &VerifyOptions) -> HarnessResult<VerifyReport> {
    let checks = vec![
        check_reference_transform()?,
        check_prep_angles(opts.solver_tolerance)?,
        check_optics(opts.hwp_offset_deg)?,
        check_tomography()?,
        check_exact_pipeline()?,
    ];
    Ok(VerifyReport { checks })
}

/// Single-state tomography: exact or simulated counts for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct TomoOutcome {
    pub report: FidelityReport,
    /// The simulated record in Monte Carlo mode.
    pub record: Option<CountsRecord>,
}

pub fn run_tomo(
    theta: f64,
    delta: f64,
    mode: PipelineMode,
    trials: u64,
    seed: u64,
) -> HarnessResult<TomoOutcome> {
    if !theta.is_finite() || !delta.is_finite() {
        return Err(config_err("theta and delta must be finite"));
    }
    match mode {
        PipelineMode::Exact => Ok(TomoOutcome {
            report: exact_report(theta, delta)?,
            record: None,
        }),
        PipelineMode::MonteCarlo => {
            if trials == 0 {
                return Err(config_err("trials must be at least 1"));
            }
            let model = DetectorModel::default();
            let table = crate::tomography::optical_detection_table(theta, delta)?;
            let record = simulate_counts(&table, &model, trials, seed)?;
            let report = monte_carlo_report(theta, delta, &model, trials, seed)?;
            Ok(TomoOutcome {
                report,
                record: Some(record),
            })
        }
        PipelineMode::Perturbed => Err(config_err("tomo supports exact and montecarlo modes")),
    }
}

fn matrix_text(label: &str, rho: &DensityMatrix) -> String {
    let m = rho.matrix();
    let mut s = format!("{label}:\n");
    for r in 0..2 {
        let cells: Vec<String> = (0..2)
            .map(|c| format!("{:+.6}{:+.6}i", m[(r, c)].re, m[(r, c)].im))
            .collect();
        writeln!(s, "  [{}]", cells.join(", ")).unwrap();
    }
    s
}

impl TomoOutcome {
    pub fn text(&self) -> String {
        let r = &self.report;
        let mut s = format!(
            "input theta={:.6} delta={:.6} mode={}\n",
            r.theta, r.delta, r.mode
        );
        s.push_str(&matrix_text("rho1", &r.rho1));
        s.push_str(&matrix_text("rho2", &r.rho2));
        writeln!(s, "F1={:.9} stderr1={:.9}", r.f1, r.stderr1).unwrap();
        writeln!(s, "F2={:.9} stderr2={:.9}", r.f2, r.stderr2).unwrap();
        s
    }
}

/// Reference matrix of an ideal clone, `(2/3)|ψ⟩⟨ψ| + I/6`.
pub fn ideal_clone(theta: f64, delta: f64) -> crate::Result<DensityMatrix> {
    let psi = PureState::from_angles(q(1), theta, delta).to_density();
    let mixed = DensityMatrix::maximally_mixed(&[QubitLabel::new(1)])?;
    let m = psi.matrix() * C64::new(2.0 / 3.0, 0.0) + mixed.matrix() * C64::new(1.0 / 3.0, 0.0);
    DensityMatrix::new(&[q(1)], m)
}
