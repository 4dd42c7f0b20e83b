//! Acceptance suite. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line each and exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qcloning::budget::{fidelity_error_bound, perturbation_sweep, ErrorBudget, PerturbationConfig};
use qcloning::harness::SweepConfig;
use qcloning::hilbert::PureState;
use qcloning::network::{
    bh_prep_angles, bh_prep_state, bh_reference_transform, build_network, clone_state,
    optimal_fidelity, prep_gates, triplicate, Circuit, ANCILLA, COPY, ORIGINAL,
};
use qcloning::optics::build_setup_train;
use qcloning::tomography::{
    exact_report, monte_carlo_fidelities, optical_detection_table, reconstruct_single_qubit,
    DetectorModel,
};

const FIVE_SIXTHS: f64 = 5.0 / 6.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail
        .push_str(&format!(", {:.3} s", elapsed.as_secs_f64()));
    if let Some(limit) = limit {
        if elapsed > limit {
            o.passed = false;
            o.detail
                .push_str(&format!(" (limit {:.0} s)", limit.as_secs_f64()));
        }
    }
    o
}

fn grid() -> Vec<(f64, f64)> {
    let thetas = SweepConfig::default().theta_grid();
    let deltas = [0.0, PI / 4.0, FRAC_PI_2, 3.0 * PI / 4.0];
    deltas
        .iter()
        .flat_map(|&d| thetas.iter().map(move |&t| (t, d)))
        .collect()
}

fn exact_universality() -> Outcome {
    let points = grid();
    let mut gate_dev: f64 = 0.0;
    let mut optics_dev: f64 = 0.0;
    for &(t, d) in &points {
        let g = clone_state(t, d).expect("gate tier");
        gate_dev = gate_dev
            .max((g.f1 - FIVE_SIXTHS).abs())
            .max((g.f2 - FIVE_SIXTHS).abs());
        let o = exact_report(t, d).expect("optics tier");
        optics_dev = optics_dev
            .max((o.f1 - FIVE_SIXTHS).abs())
            .max((o.f2 - FIVE_SIXTHS).abs());
    }
    outcome(
        points.len() == 76 && gate_dev <= 1e-9 && optics_dev <= 1e-9,
        format!(
            "{} points, gate max |F-5/6| = {gate_dev:.2e}, optics max |F-5/6| = {optics_dev:.2e}",
            points.len()
        ),
    )
}

fn reference_equivalence() -> Outcome {
    let network = build_network().expect("network");
    let blanks = PureState::basis(&[COPY, ANCILLA], &[0, 0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let psi = PureState::random(&[ORIGINAL], &mut rng).unwrap();
        let input = qcloning::hilbert::tensor_product(&psi, &blanks).unwrap();
        let out = network.apply(&input).unwrap();
        let expected = bh_reference_transform(&psi).unwrap();
        worst = worst.max(out.max_deviation_up_to_phase(&expected).unwrap());
    }
    outcome(
        worst <= 1e-10,
        format!("1000 inputs, max deviation {worst:.2e}"),
    )
}

fn optimal_fidelity_formula() -> Outcome {
    let f12 = optimal_fidelity(1, 2).unwrap();
    let f13 = optimal_fidelity(1, 3).unwrap();
    let diag_ok = (1..=10).all(|m| (optimal_fidelity(m, m).unwrap() - 1.0).abs() < 1e-15);
    let monotone = (1..=5).all(|m| {
        (m..m + 20)
            .map(|n| optimal_fidelity(m, n).unwrap())
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] < w[0])
    });
    outcome(
        f12 == FIVE_SIXTHS && (f13 - 7.0 / 9.0).abs() < 1e-15 && diag_ok && monotone,
        format!(
            "F(1,2) = {f12}, F(1,3) = {f13:.12}, F(M,M) = 1: {diag_ok}, monotone in N: {monotone}"
        ),
    )
}

fn prep_solver() -> Outcome {
    let angles = bh_prep_angles().expect("solver");
    let circuit =
        Circuit::with_gates(&[COPY, ANCILLA], &prep_gates(&angles, COPY, ANCILLA)).unwrap();
    let out = circuit
        .apply(&PureState::basis(&[COPY, ANCILLA], &[0, 0]).unwrap())
        .unwrap();
    let overlap = out.overlap(&bh_prep_state()).unwrap();
    outcome(
        overlap >= 1.0 - 1e-10,
        format!("angles {:?}, overlap {overlap:.15}", angles.as_array()),
    )
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn bloch_density(s: [f64; 3]) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    DMatrix::from_row_slice(
        2,
        2,
        &[
            c((1.0 + s[2]) / 2.0, 0.0),
            c(s[0] / 2.0, -s[1] / 2.0),
            c(s[0] / 2.0, s[1] / 2.0),
            c((1.0 - s[2]) / 2.0, 0.0),
        ],
    )
}

fn tomography_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s = loop {
            let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                break v;
            }
        };
        let probs = [
            (1.0 + s[2]) / 2.0,
            (1.0 - s[2]) / 2.0,
            (1.0 + s[0]) / 2.0,
            (1.0 + s[1]) / 2.0,
        ];
        let rho = reconstruct_single_qubit(probs).unwrap();
        let diff = max_abs(&(rho.matrix() - bloch_density(s)));
        worst = worst.max(diff);
    }
    let mut pipeline: f64 = 0.0;
    for (t, d) in [
        (0.0, 0.0),
        (0.7, 1.1),
        (FRAC_PI_2, 0.0),
        (PI / 4.0, FRAC_PI_2),
    ] {
        let r = exact_report(t, d).unwrap();
        pipeline = pipeline
            .max((r.f1 - FIVE_SIXTHS).abs())
            .max((r.f2 - FIVE_SIXTHS).abs());
    }
    outcome(
        worst <= 1e-12 && pipeline <= 1e-10,
        format!("100 states, max |Δρ| = {worst:.2e}; 8-path pipeline max |F-5/6| = {pipeline:.2e}"),
    )
}

fn within_count(theta: f64, delta: f64, seeds: u64) -> ([usize; 2], usize) {
    let table = optical_detection_table(theta, delta).unwrap();
    let model = DetectorModel::default();
    let fs: Vec<[f64; 2]> = (0..seeds)
        .into_par_iter()
        .map(|s| monte_carlo_fidelities(&table, theta, delta, &model, 20_000, s).unwrap())
        .collect();
    let ok = |f: f64| (f - FIVE_SIXTHS).abs() <= 0.01;
    let each = [0, 1].map(|r| fs.iter().filter(|f| ok(f[r])).count());
    let both = fs.iter().filter(|f| ok(f[0]) && ok(f[1])).count();
    (each, both)
}

fn monte_carlo_realism() -> Outcome {
    let (each, both) = within_count(0.0, 0.0, 100);
    outcome(
        each.iter().all(|&n| n >= 95),
        format!(
            "θ = 0, 20000 trials, 100 seeds: replica 1 {}/100, replica 2 {}/100 within ±0.01 (both {}/100)",
            each[0], each[1], both
        ),
    )
}

fn error_model() -> Outcome {
    let bound = fidelity_error_bound(&ErrorBudget::uniform(0.002, 0.0018)).unwrap();
    let setup = build_setup_train(0.7, 1.1).unwrap();
    let summary = perturbation_sweep(
        &setup,
        &PerturbationConfig {
            theta: 0.7,
            delta: 1.1,
            jitter: 0.1f64.to_radians(),
            delta_c_total: 0.002,
            n_samples: 200,
            seed: 42,
        },
    )
    .unwrap();
    outcome(
        (bound - 0.0047).abs() < 1e-12 && summary.mean <= 0.005,
        format!(
            "bound {bound:.4}; 200 samples at 0.1°: mean |ΔF| = {:.5}, max {:.5}",
            summary.mean, summary.max
        ),
    )
}

fn symmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut equal: f64 = 0.0;
    let mut shrink: f64 = 0.0;
    for _ in 0..200 {
        let t = rng.random_range(0.0..PI);
        let d = rng.random_range(0.0..2.0 * PI);
        let c = clone_state(t, d).unwrap();
        equal = equal.max(
            c.rho1
                .max_abs_diff(&c.rho2.relabeled(&[ORIGINAL]).unwrap())
                .unwrap(),
        );
        let psi = c.input.amplitudes();
        let proj = psi * psi.adjoint();
        let expected =
            proj.map(|z| z * (2.0 / 3.0)) + DMatrix::<Complex64>::identity(2, 2).map(|z| z / 6.0);
        shrink = shrink.max(max_abs(&(c.rho1.matrix() - expected)));
    }
    let mut tri_asym: f64 = 0.0;
    let mut tri_f = Vec::new();
    for i in 0..=12 {
        let t = i as f64 * PI / 12.0;
        let tr = triplicate(t).unwrap();
        tri_asym = tri_asym.max(tr.asymmetry());
        tri_f.extend(tr.fidelities);
    }
    let spread = tri_f.iter().cloned().fold(f64::MIN, f64::max)
        - tri_f.iter().cloned().fold(f64::MAX, f64::min);
    outcome(
        equal <= 1e-12 && shrink <= 1e-10 && tri_asym <= 1e-9 && spread <= 1e-9,
        format!(
            "|ρ1-ρ2| = {equal:.2e}, |ρ - (2/3)|ψ><ψ| - I/6| = {shrink:.2e}; triplicator F = {:.12}, spread {spread:.2e}, asymmetry {tri_asym:.2e}",
            tri_f[0]
        ),
    )
}

fn run_sweep_binary(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_qcloning"))
        .arg("sweep")
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn reproducibility() -> Outcome {
    let mut details = Vec::new();
    let mut passed = true;
    for args in [
        &["--mode", "montecarlo", "--seed", "7"][..],
        &["--mode", "perturbed", "--seed", "7", "--samples", "20"][..],
    ] {
        let a = run_sweep_binary(args);
        let b = run_sweep_binary(args);
        let same = a == b && !a.is_empty();
        passed &= same;
        details.push(format!("{} {} bytes identical: {same}", args[1], a.len()));
    }
    outcome(passed, details.join(", "))
}

type Criterion = (&'static str, Box<dyn FnOnce() -> Outcome>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "1 exact universality",
            Box::new(|| timed(Some(Duration::from_secs(1)), exact_universality)),
        ),
        (
            "2 reference transform",
            Box::new(|| timed(Some(Duration::from_secs(1)), reference_equivalence)),
        ),
        (
            "3 optimal fidelity formula",
            Box::new(|| timed(None, optimal_fidelity_formula)),
        ),
        (
            "4 preparation solver",
            Box::new(|| timed(None, prep_solver)),
        ),
        (
            "5 tomography round trip",
            Box::new(|| timed(None, tomography_round_trip)),
        ),
        (
            "6 monte carlo realism",
            Box::new(|| timed(Some(Duration::from_secs(30)), monte_carlo_realism)),
        ),
        ("7 error model", Box::new(|| timed(None, error_model))),
        ("8 symmetry", Box::new(|| timed(None, symmetry))),
        (
            "9 reproducibility",
            Box::new(|| timed(None, reproducibility)),
        ),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let o = f();
        if !o.passed {
            failures += 1;
        }
        println!(
            "{} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let (each, both) = within_count(FRAC_PI_2 / 2.0, FRAC_PI_2, 100);
    println!(
        "INFO equatorial input, 20000 trials: replica 1 {}/100, replica 2 {}/100 within ±0.01 (both {}/100)",
        each[0], each[1], both
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
