//! Calibrate stable tail intensities so each component's one-step increment
//! exceeds a chosen threshold with a prescribed probability, then verify the
//! targets by simulation.
//!
//!     cargo run --release -p sbg --example calibrate_tails

use rand::SeedableRng;
use sbg::stable::{self, StableLaw};
use sbg::simulate::SECONDS_PER_DAY;

fn main() -> sbg::Result<()> {
    let delta = 0.01 / SECONDS_PER_DAY; // 0.01 seconds, in days
    let eta: f64 = 0.0625;
    let threshold = 4.0 * (eta * delta).sqrt();
    println!("threshold = 4 sqrt(eta delta) = {threshold:.6e}");

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for (beta, target) in [(1.0, 0.05), (0.75, 0.005)] {
        let a = stable::calibrate_intensity(beta, delta, threshold, target)?;
        let law = StableLaw::new(beta, a)?;
        let round_trip = law.tail_prob(delta, threshold)?;

        // Monte Carlo confirmation
        let n = 2_000_000;
        let mut hits = 0usize;
        for _ in 0..n {
            if law.increment(delta, &mut rng)?.abs() >= threshold {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        println!(
            "beta = {beta:4.2}: a = {a:9.4} per day, tail_prob = {round_trip:.6} \
             (target {target}), simulated frequency = {freq:.6}"
        );
    }
    Ok(())
}
