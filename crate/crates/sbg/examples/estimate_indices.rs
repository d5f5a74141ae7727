//! End-to-end estimation on one simulated path: tail counts, preliminary
//! log-ratio estimates, and the contrast fit.
//!
//!     cargo run --release -p sbg --example estimate_indices

use sbg::counts::{tail_curve, Side};
use sbg::estimators::{self, default_threshold};
use sbg::harness::ExperimentConfig;
use sbg::simulate;

fn main() -> sbg::Result<()> {
    let config = ExperimentConfig::sv_two_stable_benchmark(5_000_000, 1, 7);
    let scheme = config.scheme.scheme()?;
    let model = config.model.resolve(scheme.delta)?;
    let series = simulate::simulate_path(&model, &scheme, config.mode, 7)?;

    // the observable everything is built on: exceedance counts along the
    // threshold grid
    let u_n = default_threshold(&scheme, &config.prelim);
    let thresholds: Vec<f64> = config.contrast.v_grid.iter().map(|v| v * u_n).collect();
    let curve = tail_curve(&series, &thresholds, Side::Absolute)?;
    println!("threshold  count");
    for (t, c) in curve.thresholds().iter().zip(curve.counts()) {
        println!("{t:9.5}  {c:8.0}");
    }

    let prelim = estimators::preliminary_estimate(&series, &scheme, &config.prelim)?;
    let clean = estimators::sanitize(&prelim);
    println!("\npreliminary estimates (log count ratios):");
    for (i, e) in clean.entries.iter().enumerate() {
        println!(
            "  index {}: beta = {:?}, intensity = {:?} [{:?}]",
            i + 1,
            e.beta,
            e.gamma,
            e.status
        );
    }
    let j_hat = estimators::stop_rule(&clean, config.prelim.epsilon);
    println!("stopping rule estimates {j_hat} usable index(es)");

    let fit = estimators::final_estimate(&series, &scheme, &clean, &config.contrast)?;
    println!("\ncontrast fit (truth: beta = (1.00, 0.75)):");
    for (i, e) in fit.entries.iter().enumerate() {
        println!(
            "  index {}: beta = {:.4}, integrated intensity = {:.2}",
            i + 1,
            e.beta.unwrap(),
            e.gamma.unwrap()
        );
    }
    let d = fit.optimizer.unwrap();
    println!(
        "contrast = {:.4e} ({} of {} starts converged)",
        fit.contrast.unwrap(),
        d.converged_starts,
        d.starts
    );

    let betas: Vec<f64> = fit.entries.iter().filter_map(|e| e.beta).collect();
    println!(
        "identifiability of the fitted sequence: {:?}",
        estimators::identifiable_indices(&betas)?
    );
    Ok(())
}
