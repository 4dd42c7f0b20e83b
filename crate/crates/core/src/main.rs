use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcloning::harness::{
    run_sweep, run_tomo, run_verify, HarnessError, HarnessResult, SweepConfig, VerifyOptions,
    EXACT_TOLERANCE,
};
use qcloning::tomography::PipelineMode;

#[derive(Parser)]
#[command(
    name = "qcloning",
    version,
    about = "Universal 1->2 qubit cloning: gate network, optics and tomography"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity of both clones over a grid of input states, as CSV.
    Sweep(SweepArgs),
    /// Consistency checks of the gate, optics and tomography layers.
    Verify(VerifyArgs),
    /// Reconstruct both clones of one input state.
    Tomo(TomoArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// exact, montecarlo or perturbed.
    #[arg(long)]
    mode: Option<PipelineMode>,
    /// Photons per analyzer setting (montecarlo).
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Orientation jitter of waveplates and polarizers in degrees (perturbed).
    #[arg(long)]
    jitter_deg: Option<f64>,
    /// Total relative path-count oscillation per clone (perturbed).
    #[arg(long)]
    delta_c: Option<f64>,
    /// Perturbed samples per grid point.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    theta_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_end: Option<f64>,
    #[arg(long)]
    theta_steps: Option<usize>,
    /// Comma-separated phases in radians.
    #[arg(long)]
    deltas: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Residual tolerance of the preparation-angle solver.
    #[arg(long)]
    solver_tolerance: Option<f64>,
    /// Mis-set the first half-wave plate of the optical train by this many degrees.
    #[arg(long, hide = true, allow_hyphen_values = true)]
    inject_hwp_offset_deg: Option<f64>,
}

#[derive(Args)]
struct TomoArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    /// exact or montecarlo.
    #[arg(long, default_value = "exact")]
    mode: PipelineMode,
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the simulated counts table here (montecarlo).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sweep_config(args: &SweepArgs) -> HarnessResult<SweepConfig> {
    let mut cfg = SweepConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    if let Some(v) = args.mode {
        cfg.mode = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.jitter_deg {
        cfg.jitter_deg = v;
    }
    if let Some(v) = args.delta_c {
        cfg.delta_c = v;
    }
    if let Some(v) = args.samples {
        cfg.samples = v;
    }
    if let Some(v) = args.theta_start {
        cfg.theta_start = v;
    }
    if let Some(v) = args.theta_end {
        cfg.theta_end = v;
    }
    if let Some(v) = args.theta_steps {
        cfg.theta_steps = v;
    }
    if let Some(v) = &args.deltas {
        cfg.set("deltas", v)?;
    }
    if let Some(v) = &args.out {
        cfg.out = Some(v.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn io_error(path: &str, e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: PathBuf::from(path),
        message: e.to_string(),
    }
}

fn sweep(args: &SweepArgs) -> HarnessResult<()> {
    let cfg = sweep_config(args)?;
    let out = run_sweep(&cfg)?;
    if cfg.out.is_some() {
        out.write()?;
        print!("{}", out.summary());
    } else {
        std::io::stdout()
            .write_all(out.csv().as_bytes())
            .map_err(|e| io_error("<stdout>", e))?;
        eprint!("{}", out.summary());
    }
    if cfg.mode == PipelineMode::Exact && out.max_deviation > EXACT_TOLERANCE {
        return Err(HarnessError::Verification(format!(
            "exact fidelity deviates from 5/6 by {:.3e}",
            out.max_deviation
        )));
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> HarnessResult<()> {
    let report = run_verify(&VerifyOptions {
        hwp_offset_deg: args.inject_hwp_offset_deg,
        solver_tolerance: args.solver_tolerance,
    })?;
    print!("{}", report.text());
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        Err(HarnessError::Verification(failed.join(", ")))
    }
}

fn tomo(args: &TomoArgs) -> HarnessResult<()> {
    let outcome = run_tomo(args.theta, args.delta, args.mode, args.trials, args.seed)?;
    print!("{}", outcome.text());
    if let (Some(path), Some(record)) = (&args.out, &outcome.record) {
        std::fs::write(path, record.to_text()).map_err(|e| HarnessError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
        Command::Tomo(a) => tomo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
