//! Re-derives the triplicator preparation state frozen in
//! `qcloning::network::triplicator::TRIPLICATOR_PREP_AMPLITUDES`.
//!
//!     cargo run --release --example derive_triplicator

use qcloning::network::triplicator::{
    search_triplicator_prep, triplicate, TRIPLICATOR_PREP_AMPLITUDES,
};

fn main() -> Result<(), qcloning::Error> {
    let found = search_triplicator_prep()?;
    let a = found.angles;
    println!(
        "angles    = ({:.15}, {:.15}, {:.15})",
        a.theta1, a.theta2, a.theta3
    );
    println!("objective = {:.3e}", found.cost);
    println!("fidelity  = {:.15}", found.fidelity);
    let amps: Vec<f64> = found.prep_state.amplitudes().iter().map(|z| z.re).collect();
    println!("prep amplitudes |00>,|01>,|10>,|11> = {amps:.16?}");
    println!("frozen                              = {TRIPLICATOR_PREP_AMPLITUDES:.16?}");

    for k in 0..=8 {
        let theta = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 8.0;
        let t = triplicate(theta)?;
        println!(
            "theta = {theta:+.6}  F = {:.12} {:.12} {:.12}  asymmetry = {:.2e}",
            t.fidelities[0],
            t.fidelities[1],
            t.fidelities[2],
            t.asymmetry()
        );
    }
    Ok(())
}
