//! A small Monte Carlo experiment: simulate, estimate and summarize over
//! independent replicates, then write the result table as CSV.
//!
//!     cargo run --release -p sbg --example monte_carlo

use sbg::harness::{self, ExperimentConfig};

fn main() -> sbg::Result<()> {
    // 20 replicates of a reduced benchmark so the example finishes quickly
    let config = ExperimentConfig::sv_two_stable_benchmark(1_000_000, 20, 314_159);
    let table = harness::run_monte_carlo(&config)?;

    println!("per-parameter summaries over {} replicates:", table.rows.len());
    for s in &table.summary {
        println!(
            "  {:16} median = {:9.4}  std = {:9.4}  rmse = {}",
            s.name,
            s.median,
            s.std,
            s.rmse.map(|r| format!("{r:.4}")).unwrap_or_else(|| "-".into())
        );
    }

    let path = std::env::temp_dir().join("sbg-example-montecarlo.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    harness::write_csv(&mut file, &table, config.prelim.j)?;
    println!("full table written to {}", path.display());
    Ok(())
}
