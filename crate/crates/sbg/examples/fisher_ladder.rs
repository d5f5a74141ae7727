//! Diagonal Fisher information of the Brownian-plus-two-stables model over a
//! ladder of observation meshes, with the fitted decay exponents next to the
//! asymptotic ones.
//!
//!     cargo run --release -p sbg --example fisher_ladder

use sbg::fisher::{self, GridSpec, ParametricModel};

fn main() -> sbg::Result<()> {
    let model = ParametricModel::new(0.0, 0.1, 1.0, 1.2, 0.75, 0.4)?;
    let deltas = [1e-5, 1e-4, 1e-3, 1e-2];
    let spec = GridSpec::default();

    println!("delta      I_b1b1       I_a1a1       I_b2b2       I_a2a2      mass captured");
    let mut results = Vec::new();
    for delta in deltas {
        let r = fisher::fisher_all(&model, delta, &spec)?;
        println!(
            "{delta:8.0e}  {:11.5e}  {:11.5e}  {:11.5e}  {:11.5e}  {:.10}",
            r.beta1_beta1.value, r.a1_a1.value, r.beta2_beta2.value, r.a2_a2.value, r.mass_captured
        );
        results.push(r);
    }

    println!("\nfitted delta-exponents (theory log factor removed):");
    #[allow(clippy::type_complexity)]
    let entries: [(&str, fn(&fisher::FisherResult) -> f64, f64, f64); 4] = [
        ("I_b1b1", |r| r.beta1_beta1.value, 0.5, 1.5),
        ("I_a1a1", |r| r.a1_a1.value, 0.5, -0.5),
        ("I_b2b2", |r| r.beta2_beta2.value, 0.75, 1.75),
        ("I_a2a2", |r| r.a2_a2.value, 0.75, -0.25),
    ];
    for (name, get, theory, kappa) in entries {
        let values: Vec<f64> = results.iter().map(get).collect();
        let slope = fisher::slope_with_log_factor_removed(&deltas, &values, kappa)?;
        println!("  {name}: fitted {slope:+.4}, asymptotic {theory:+.4}");
    }
    Ok(())
}
