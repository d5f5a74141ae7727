//! Emit the benchmark experiment configuration as JSON, ready for the CLI:
//!
//!     cargo run --release -p sbg --example benchmark_config > bench.json
//!     cargo run --release -p sbg -- montecarlo --config bench.json --out results.csv

use sbg::harness::ExperimentConfig;

fn main() -> sbg::Result<()> {
    let config = ExperimentConfig::sv_two_stable_benchmark(5_000_000, 100, 20_260_808);
    println!("{}", serde_json::to_string_pretty(&config)?);
    Ok(())
}
