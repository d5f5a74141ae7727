//! Compare the observable exceedance counts U(u, Δ) with the oracle jump
//! counts V(u) from a jump-resolved simulation, against the analytic
//! integrated tail.
//!
//!     cargo run --release -p sbg --example jump_count_oracle

use sbg::counts::{count_increments, count_true_jumps, Side};
use sbg::simulate::{self, ModelSpec, SamplingScheme, SimulationMode, VolatilitySpec};
use sbg::stable::StableLaw;

fn main() -> sbg::Result<()> {
    let model = ModelSpec::new(
        0.0,
        VolatilitySpec::Constant { sigma: 0.0 },
        vec![StableLaw::new(1.5, 1.0)?],
        0.0,
    )?;
    let scheme = SamplingScheme::new(1.0, 1e-5)?;
    let series = simulate::simulate_path(
        &model,
        &scheme,
        SimulationMode::JumpResolved { floor: 1e-3 },
        99,
    )?;
    let record = series.jump_record.as_ref().unwrap();
    let horizon = scheme.n() as f64 * scheme.delta;
    println!("{} jumps recorded above the floor {:.0e}", record.jumps.len(), record.floor);
    println!("\n   u        U(u)     V(u)   integrated tail");
    for u in [0.01, 0.03, 0.1, 0.3] {
        let u_count = count_increments(&series, u, Side::Absolute)?;
        let v_count = count_true_jumps(record, u)?;
        let abar = simulate::integrated_tail(&model, u, horizon)?;
        println!("{u:6.2}  {u_count:8}  {v_count:7}  {abar:12.1}");
    }
    println!("\npositive and negative tails add up to the absolute one:");
    let u = 0.03;
    let pos = count_increments(&series, u, Side::Positive)?;
    let neg = count_increments(&series, u, Side::Negative)?;
    let all = count_increments(&series, u, Side::Absolute)?;
    println!("  U_+ = {pos}, U_- = {neg}, U = {all}");
    Ok(())
}
