//! Prints perturbation-sweep statistics and the Monte Carlo fidelity
//! spread for a few input states.

use qcloning::budget::{perturbation_sweep, PerturbationConfig, FIVE_SIXTHS};
use qcloning::optics::build_setup_train;
use qcloning::tomography::{monte_carlo_fidelities, optical_detection_table, DetectorModel};
use std::f64::consts::PI;

fn main() -> Result<(), qcloning::Error> {
    let inputs = [
        (0.0, 0.0),
        (PI / 4.0, 0.0),
        (PI / 4.0, PI / 2.0),
        (0.3, 0.7),
        (PI / 2.0, 0.0),
    ];
    for (theta, delta) in inputs {
        let setup = build_setup_train(theta, delta)?;
        for (j, dc) in [(0.0018, 0.002), (0.0018, 0.0), (0.0, 0.002)] {
            let s = perturbation_sweep(
                &setup,
                &PerturbationConfig {
                    theta,
                    delta,
                    jitter: j,
                    delta_c_total: dc,
                    n_samples: 500,
                    seed: 1,
                },
            )?;
            println!(
                "theta={theta:.3} delta={delta:.3} jitter={j} dc={dc}: mean={:.5} max={:.5} flagged={}",
                s.mean,
                s.max,
                s.flagged.len()
            );
        }
        let table = optical_detection_table(theta, delta)?;
        for trials in [20_000u64, 1_000_000] {
            let mut within = [0usize; 3];
            let mut devs = Vec::new();
            for seed in 0..100 {
                let f = monte_carlo_fidelities(
                    &table,
                    theta,
                    delta,
                    &DetectorModel::default(),
                    trials,
                    seed,
                )?;
                let tol = if trials == 20_000 { 0.01 } else { 0.003 };
                let ok = f.map(|x| (x - FIVE_SIXTHS).abs() < tol);
                within[0] += ok[0] as usize;
                within[1] += ok[1] as usize;
                within[2] += (ok[0] && ok[1]) as usize;
                devs.extend(f.map(|x| x - FIVE_SIXTHS));
            }
            let mean = devs.iter().sum::<f64>() / devs.len() as f64;
            let sd =
                (devs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / devs.len() as f64).sqrt();
            println!(
                "  trials={trials}: within r1={} r2={} both={} bias={mean:.5} sd={sd:.5}",
                within[0], within[1], within[2]
            );
        }
    }
    Ok(())
}
