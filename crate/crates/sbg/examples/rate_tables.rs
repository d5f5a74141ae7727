//! Attainable-rate exponents for the four jump parameters and the
//! contrast-vs-optimal comparison, across a range of leading indices.
//!
//!     cargo run --release -p sbg --example rate_tables

use sbg::fisher::{self, ParametricModel};

fn main() -> sbg::Result<()> {
    let model = ParametricModel::new(0.0, 1.0, 1.0, 1.0, 0.75, 1.0)?;
    let rates = fisher::optimal_rates(&model);
    println!("optimal error exponents at (beta1, beta2) = (1.00, 0.75):");
    println!(
        "  beta1: delta^{:.3} (log exponent {:+.3})",
        rates.beta1.delta_exponent, rates.beta1.log_exponent
    );
    println!(
        "  a1:    delta^{:.3} (log exponent {:+.3})",
        rates.a1.delta_exponent, rates.a1.log_exponent
    );
    let b2 = rates.beta2.unwrap();
    let a2 = rates.a2.unwrap();
    println!("  beta2: delta^{:.3} (log exponent {:+.3})", b2.delta_exponent, b2.log_exponent);
    println!("  a2:    delta^{:.3} (log exponent {:+.3})", a2.delta_exponent, a2.log_exponent);

    let cmp = fisher::rate_comparison(&model, fisher::rho_max(1.0))?;
    println!("\ncontrast estimator vs the parametric optimum:");
    println!("  gamma (optimal):   {:?}", cmp.gamma);
    println!("  gamma' (contrast): {:?}", cmp.gamma_prime_optimal);
    println!("  quality ratio:     {:.4} (same for both indices)", cmp.quality);

    println!("\nquality ratio as the leading index grows (branch point {:.4}):", fisher::rate_branch_point());
    for beta1 in [0.25, 0.5, 1.0, 1.475, 1.8, 2.0] {
        println!("  beta1 = {beta1:5.3}: ratio = {:.4}", fisher::quality_ratio(beta1));
    }
    println!("  the limit at beta1 = 2 is exactly 4/11 = {:.16}", 4.0 / 11.0);
    Ok(())
}
