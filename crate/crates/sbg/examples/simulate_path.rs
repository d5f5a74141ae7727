//! Simulate the stochastic-volatility benchmark process at high frequency
//! and write the observed increments to a binary dump.
//!
//!     cargo run --release -p sbg --example simulate_path

use sbg::harness::ExperimentConfig;
use sbg::simulate::{self, SimulationMode};

fn main() -> sbg::Result<()> {
    // one trading day sampled every 0.01 seconds
    let config = ExperimentConfig::sv_two_stable_benchmark(2_340_000, 1, 42);
    let scheme = config.scheme.scheme()?;
    let model = config.model.resolve(scheme.delta)?;
    println!("model components (index, tail intensity per day):");
    for c in &model.components {
        println!("  beta = {:.2}, a = {:.3}", c.beta, c.tail_intensity);
    }

    let series = simulate::simulate_path(&model, &scheme, SimulationMode::ExactIncrement, 42)?;
    let n = series.increments.len();
    let absmax = series
        .increments
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let sum_sq: f64 = series.increments.iter().map(|x| x * x).sum();
    println!("simulated {n} increments at mesh {:.3e} days", series.delta);
    println!("largest |increment| = {absmax:.4}, realized variance = {sum_sq:.4}");

    let path = std::env::temp_dir().join("sbg-example-increments.bin");
    simulate::write_increments(&path, &series)?;
    println!("wrote the dump to {}", path.display());

    // the jump-resolved mode records every jump above a floor, which makes
    // oracle jump counts available
    let resolved = simulate::simulate_path(
        &model,
        &scheme,
        SimulationMode::JumpResolved { floor: 1e-5 },
        42,
    )?;
    let record = resolved.jump_record.as_ref().unwrap();
    println!(
        "jump-resolved run recorded {} jumps above {:.0e}",
        record.jumps.len(),
        record.floor
    );
    Ok(())
}
