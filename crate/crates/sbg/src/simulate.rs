//! Path generation for the test processes: sums of symmetric stable
//! components around a Brownian part whose variance is either constant or a
//! mean-reverting square-root process with compound-Poisson jumps.
//!
//! Two modes are provided. `ExactIncrement` draws every stable component's
//! increment exactly per time step. `JumpResolved` simulates each
//! component's jumps above a floor as a compound Poisson process (and
//! records them, enabling oracle jump counts), with the small-jump remainder
//! replaced by a centered Gaussian of matched variance and the Brownian and
//! volatility parts discretized by full-truncation Euler.
//!
//! Randomness: all draws come from ChaCha8 streams derived from the path
//! seed. Streams 0–2 drive the variance Brownian, the price Brownian and the
//! volatility jumps; each stable component owns the stream
//! `splitmix64(bits(β) ^ splitmix64(bits(a))) | 2^63`, so a path simulated
//! with several components equals the sum of the separately simulated
//! component paths under the same seed, exactly.

use crate::error::{Result, SbgError};
use crate::math::splitmix64;
use crate::stable::StableLaw;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// One trading day: 6.5 hours.
pub const SECONDS_PER_DAY: f64 = 23_400.0;

const STREAM_VARIANCE_BM: u64 = 0;
const STREAM_PRICE_BM: u64 = 1;
const STREAM_VOL_JUMPS: u64 = 2;

/// A jump component of the superposition: one stable law with constant
/// loading (the loading is folded into the tail intensity).
pub type JumpComponent = StableLaw;

/// Spot-variance dynamics of the Brownian part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VolatilitySpec {
    Constant {
        sigma: f64,
    },
    /// dv = κ(η − v) dt + γ √v dB + dJ, with J compound Poisson with
    /// uniform marks on [−h, h] and E[dW dB] = ρ dt.
    HestonJump {
        kappa: f64,
        eta: f64,
        gamma_vol: f64,
        rho_corr: f64,
        v0: f64,
        jump_intensity: f64,
        jump_half_width: f64,
    },
}

impl VolatilitySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VolatilitySpec::Constant { sigma } => {
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return Err(SbgError::Domain(format!(
                        "constant volatility must be >= 0, got {sigma}"
                    )));
                }
            }
            VolatilitySpec::HestonJump {
                kappa,
                eta,
                gamma_vol,
                rho_corr,
                v0,
                jump_intensity,
                jump_half_width,
            } => {
                if !(eta > 0.0) {
                    return Err(SbgError::Domain(format!(
                        "long-run variance must be positive, got {eta}"
                    )));
                }
                if !(kappa >= 0.0) || !(gamma_vol >= 0.0) {
                    return Err(SbgError::Domain(
                        "mean reversion and vol-of-vol must be >= 0".into(),
                    ));
                }
                if !(rho_corr.abs() <= 1.0) {
                    return Err(SbgError::Domain(format!(
                        "correlation must lie in [-1, 1], got {rho_corr}"
                    )));
                }
                if !(v0 >= 0.0) {
                    return Err(SbgError::Domain(format!(
                        "initial variance must be >= 0, got {v0}"
                    )));
                }
                if !(jump_intensity >= 0.0) || !(jump_half_width >= 0.0) {
                    return Err(SbgError::Domain(
                        "volatility jump intensity and half-width must be >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The full data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub drift: f64,
    pub vol: VolatilitySpec,
    /// Stable components, indices strictly decreasing.
    pub components: Vec<JumpComponent>,
    pub x0: f64,
}

impl ModelSpec {
    pub fn new(
        drift: f64,
        vol: VolatilitySpec,
        components: Vec<JumpComponent>,
        x0: f64,
    ) -> Result<Self> {
        let model = ModelSpec {
            drift,
            vol,
            components,
            x0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.vol.validate()?;
        for c in &self.components {
            StableLaw::new(c.beta, c.tail_intensity)?;
        }
        for pair in self.components.windows(2) {
            if !(pair[0].beta > pair[1].beta) {
                return Err(SbgError::Domain(format!(
                    "component indices must be strictly decreasing, got {} then {}",
                    pair[0].beta, pair[1].beta
                )));
            }
        }
        Ok(())
    }
}

/// Observation design: horizon T and mesh Δ (same time unit, days by
/// convention), yielding n = ⌊T/Δ⌋ increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingScheme {
    pub horizon: f64,
    pub delta: f64,
}

impl SamplingScheme {
    pub fn new(horizon: f64, delta: f64) -> Result<Self> {
        let scheme = SamplingScheme { horizon, delta };
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(SbgError::Domain(format!("mesh must be positive, got {delta}")));
        }
        if scheme.n() < 1 {
            return Err(SbgError::Domain(format!(
                "horizon {horizon} holds no complete increment at mesh {delta}"
            )));
        }
        Ok(scheme)
    }

    /// Number of observed increments, ⌊T/Δ⌋ (with a tiny tolerance so that
    /// horizons constructed as n·Δ don't lose an increment to rounding).
    pub fn n(&self) -> usize {
        (self.horizon / self.delta + 1e-9).floor() as usize
    }
}

/// Jumps recorded during a jump-resolved simulation: every simulated jump
/// with |size| above the floor, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub floor: f64,
    /// (time, size) pairs, time-sorted.
    pub jumps: Vec<(f64, f64)>,
}

/// Observed increments at mesh `delta`, optionally with the true-jump record.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSeries {
    pub delta: f64,
    pub increments: Vec<f64>,
    pub jump_record: Option<JumpRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SimulationMode {
    ExactIncrement,
    JumpResolved { floor: f64 },
}

fn component_stream(law: &StableLaw) -> u64 {
    splitmix64(law.beta.to_bits() ^ splitmix64(law.tail_intensity.to_bits()))
        | 0x8000_0000_0000_0000
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Variance path of the Brownian part at the observation mesh: the value at
/// index i is the (truncated) spot variance used over the i-th increment.
/// Full-truncation Euler for the square-root dynamics; the returned path is
/// nonnegative.
pub fn variance_path(vol: &VolatilitySpec, scheme: &SamplingScheme, seed: u64) -> Result<Vec<f64>> {
    vol.validate()?;
    let n = scheme.n();
    match *vol {
        VolatilitySpec::Constant { sigma } => Ok(vec![sigma * sigma; n]),
        VolatilitySpec::HestonJump {
            kappa,
            eta,
            gamma_vol,
            v0,
            jump_intensity,
            jump_half_width,
            ..
        } => {
            let dt = scheme.delta;
            let sqrt_dt = dt.sqrt();
            let mut z_rng = stream_rng(seed, STREAM_VARIANCE_BM);
            let mut j_rng = stream_rng(seed, STREAM_VOL_JUMPS);
            let jump_rate = jump_intensity * dt;
            let poisson = if jump_rate > 0.0 {
                Some(Poisson::new(jump_rate).expect("positive rate"))
            } else {
                None
            };
            let mut path = Vec::with_capacity(n);
            let mut v = v0;
            for _ in 0..n {
                let vplus = v.max(0.0);
                path.push(vplus);
                let z: f64 = StandardNormal.sample(&mut z_rng);
                let mut dj = 0.0;
                if let Some(p) = &poisson {
                    let m = p.sample(&mut j_rng) as u64;
                    for _ in 0..m {
                        dj += (j_rng.random::<f64>() * 2.0 - 1.0) * jump_half_width;
                    }
                }
                v = v + kappa * (eta - vplus) * dt + gamma_vol * vplus.sqrt() * sqrt_dt * z + dj;
            }
            Ok(path)
        }
    }
}

/// Simulate one discretely observed path and return its increments.
/// Identical (model, scheme, mode, seed) produce a bit-identical series.
pub fn simulate_path(
    model: &ModelSpec,
    scheme: &SamplingScheme,
    mode: SimulationMode,
    seed: u64,
) -> Result<IncrementSeries> {
    model.validate()?;
    let n = scheme.n();
    let dt = scheme.delta;
    let sqrt_dt = dt.sqrt();
    let horizon = n as f64 * dt;

    let variance = variance_path(&model.vol, scheme, seed)?;
    let rho = match model.vol {
        VolatilitySpec::HestonJump { rho_corr, .. } => rho_corr,
        VolatilitySpec::Constant { .. } => 0.0,
    };
    let rho_orth = (1.0 - rho * rho).sqrt();

    // Brownian part: W built from the variance driver's Gaussian via
    // ρ z₁ + √(1−ρ²) z₂.
    let mut increments = vec![model.drift * dt; n];
    let needs_brownian = match model.vol {
        VolatilitySpec::Constant { sigma } => sigma > 0.0,
        VolatilitySpec::HestonJump { .. } => true,
    };
    if needs_brownian {
        let mut z1_rng = stream_rng(seed, STREAM_VARIANCE_BM);
        let mut z2_rng = stream_rng(seed, STREAM_PRICE_BM);
        for (inc, v) in increments.iter_mut().zip(&variance) {
            let z1: f64 = StandardNormal.sample(&mut z1_rng);
            let z2: f64 = StandardNormal.sample(&mut z2_rng);
            *inc += v.sqrt() * sqrt_dt * (rho * z1 + rho_orth * z2);
        }
    }

    let mut record = None;
    match mode {
        SimulationMode::ExactIncrement => {
            for law in &model.components {
                let mut rng = stream_rng(seed, component_stream(law));
                let scale = law.scale(dt);
                for inc in increments.iter_mut() {
                    *inc += scale * crate::stable::sample_standard_unchecked(law.beta, &mut rng);
                }
            }
        }
        SimulationMode::JumpResolved { floor } => {
            if !(floor > 0.0) {
                return Err(SbgError::Domain(format!(
                    "jump-resolved floor must be positive, got {floor}"
                )));
            }
            let mut jumps: Vec<(f64, f64)> = Vec::new();
            for law in &model.components {
                // Asmussen–Rosiński validity: the small-jump Gaussian needs
                // σ(floor)/floor well above 1.
                let small_var_rate = law.tail_intensity * law.beta * floor.powf(2.0 - law.beta)
                    / (2.0 - law.beta);
                if small_var_rate.sqrt() / floor < 5.0 {
                    return Err(SbgError::Domain(format!(
                        "floor {floor:e} too coarse for beta {}: sigma(floor)/floor = {:.2} < 5",
                        law.beta,
                        small_var_rate.sqrt() / floor
                    )));
                }
                let rate = law.tail_intensity / floor.powf(law.beta);
                let expected = rate * horizon;
                if expected > 2e8 {
                    return Err(SbgError::Domain(format!(
                        "floor {floor:e} implies {expected:.1e} jumps; raise the floor"
                    )));
                }
                let mut rng = stream_rng(seed, component_stream(law));
                let n_jumps = if expected > 0.0 {
                    Poisson::new(expected).expect("positive rate").sample(&mut rng) as u64
                } else {
                    0
                };
                for _ in 0..n_jumps {
                    let t = rng.random::<f64>() * horizon;
                    let u: f64 = rng.random::<f64>();
                    let magnitude = floor * u.max(1e-300).powf(-1.0 / law.beta);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let size = sign * magnitude;
                    let idx = ((t / dt) as usize).min(n - 1);
                    increments[idx] += size;
                    jumps.push((t, size));
                }
                let small_sd = (small_var_rate * dt).sqrt();
                for inc in increments.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *inc += small_sd * g;
                }
            }
            jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
            record = Some(JumpRecord { floor, jumps });
        }
    }

    Ok(IncrementSeries {
        delta: dt,
        increments,
        jump_record: record,
    })
}

/// Analytic integrated tail Ā(u)_t = t · Σᵢ aᵢ/u^{βᵢ} for constant-loading
/// (Lévy) models.
pub fn integrated_tail(model: &ModelSpec, u: f64, t: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(SbgError::Domain(format!("threshold must be positive, got {u}")));
    }
    if !(t >= 0.0) {
        return Err(SbgError::Domain(format!("time must be >= 0, got {t}")));
    }
    Ok(t * model
        .components
        .iter()
        .map(|c| c.tail_intensity / u.powf(c.beta))
        .sum::<f64>())
}

const DUMP_MAGIC: &[u8; 8] = b"SBGINCR1";

/// Binary increment dump: magic `SBGINCR1`, n as u64 LE, delta as f64 LE,
/// then n little-endian f64 increments. The jump record is not serialized.
pub fn write_increments_to<W: Write>(writer: &mut W, series: &IncrementSeries) -> Result<()> {
    writer.write_all(DUMP_MAGIC)?;
    writer.write_all(&(series.increments.len() as u64).to_le_bytes())?;
    writer.write_all(&series.delta.to_le_bytes())?;
    for x in &series.increments {
        writer.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_increments_from<R: Read>(reader: &mut R) -> Result<IncrementSeries> {
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(SbgError::InvalidConfig(
            "not an increment dump (bad magic)".into(),
        ));
    }
    let mut buf8 = [0u8; 8];
    reader.read_exact(&mut buf8)?;
    let n = u64::from_le_bytes(buf8) as usize;
    reader.read_exact(&mut buf8)?;
    let delta = f64::from_le_bytes(buf8);
    let mut increments = Vec::with_capacity(n);
    for _ in 0..n {
        reader.read_exact(&mut buf8)?;
        increments.push(f64::from_le_bytes(buf8));
    }
    Ok(IncrementSeries {
        delta,
        increments,
        jump_record: None,
    })
}

pub fn write_increments(path: &Path, series: &IncrementSeries) -> Result<()> {
    let mut writer = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_increments_to(&mut writer, series)
}

pub fn read_increments(path: &Path) -> Result<IncrementSeries> {
    let mut reader = std::io::BufReader::new(std::fs::File::open(path)?);
    read_increments_from(&mut reader)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levy_model(components: Vec<JumpComponent>) -> ModelSpec {
        ModelSpec::new(0.0, VolatilitySpec::Constant { sigma: 0.0 }, components, 0.0).unwrap()
    }

    #[test]
    fn model_rejects_nondecreasing_betas() {
        let comps = vec![
            StableLaw::new(1.0, 1.0).unwrap(),
            StableLaw::new(1.5, 1.0).unwrap(),
        ];
        assert!(ModelSpec::new(0.0, VolatilitySpec::Constant { sigma: 0.1 }, comps, 0.0).is_err());
    }

    #[test]
    fn scheme_counts_increments() {
        let s = SamplingScheme::new(1.0, 0.1).unwrap();
        assert_eq!(s.n(), 10);
        // horizon built as n·Δ must not lose an increment to rounding
        let delta = 0.01 / SECONDS_PER_DAY;
        let s = SamplingScheme::new(5_000_000.0 * delta, delta).unwrap();
        assert_eq!(s.n(), 5_000_000);
        assert!(SamplingScheme::new(0.01, 0.1).is_err());
    }

    #[test]
    fn brownian_variance_matches_sigma() {
        let sigma = 0.2;
        let model = ModelSpec::new(
            0.0,
            VolatilitySpec::Constant { sigma },
            vec![],
            0.0,
        )
        .unwrap();
        let scheme = SamplingScheme::new(100.0, 1e-4).unwrap();
        let series =
            simulate_path(&model, &scheme, SimulationMode::ExactIncrement, 101).unwrap();
        let n = series.increments.len() as f64;
        let var = series.increments.iter().map(|x| x * x).sum::<f64>() / n / scheme.delta;
        let se = sigma * sigma * (2.0 / n).sqrt();
        assert!(
            (var - sigma * sigma).abs() < 3.0 * se,
            "sample variance {var} vs {}",
            sigma * sigma
        );
    }

    #[test]
    fn determinism_bitwise() {
        let model = ModelSpec::new(
            0.01,
            VolatilitySpec::HestonJump {
                kappa: 5.0,
                eta: 0.0625,
                gamma_vol: 0.5,
                rho_corr: -0.5,
                v0: 0.0625,
                jump_intensity: 10.0,
                jump_half_width: 0.3,
            },
            vec![
                StableLaw::new(1.0, 2.0).unwrap(),
                StableLaw::new(0.75, 1.0).unwrap(),
            ],
            1.0,
        )
        .unwrap();
        let scheme = SamplingScheme::new(0.5, 1e-4).unwrap();
        for mode in [
            SimulationMode::ExactIncrement,
            SimulationMode::JumpResolved { floor: 1e-4 },
        ] {
            let a = simulate_path(&model, &scheme, mode, 7).unwrap();
            let b = simulate_path(&model, &scheme, mode, 7).unwrap();
            assert_eq!(a, b);
            let c = simulate_path(&model, &scheme, mode, 8).unwrap();
            assert_ne!(a.increments, c.increments);
        }
    }

    #[test]
    fn modes_agree_in_distribution() {
        // single stable component: exact draws vs compound Poisson plus
        // Gaussian remainder
        let model = levy_model(vec![StableLaw::new(1.5, 1.0).unwrap()]);
        let scheme = SamplingScheme::new(1.0, 1e-5).unwrap();
        let exact = simulate_path(&model, &scheme, SimulationMode::ExactIncrement, 21).unwrap();
        let resolved = simulate_path(
            &model,
            &scheme,
            SimulationMode::JumpResolved { floor: 1e-4 },
            22,
        )
        .unwrap();
        let (_, p) = crate::stats::ks_two_sample(&exact.increments, &resolved.increments);
        assert!(p > 0.01, "KS p {p}");
    }

    #[test]
    fn sum_decomposition_is_exact() {
        let l1 = StableLaw::new(1.4, 0.8).unwrap();
        let l2 = StableLaw::new(0.9, 0.5).unwrap();
        let scheme = SamplingScheme::new(0.2, 1e-4).unwrap();
        let seed = 99;
        let both = simulate_path(
            &levy_model(vec![l1, l2]),
            &scheme,
            SimulationMode::ExactIncrement,
            seed,
        )
        .unwrap();
        let one = simulate_path(
            &levy_model(vec![l1]),
            &scheme,
            SimulationMode::ExactIncrement,
            seed,
        )
        .unwrap();
        let two = simulate_path(
            &levy_model(vec![l2]),
            &scheme,
            SimulationMode::ExactIncrement,
            seed,
        )
        .unwrap();
        for i in 0..both.increments.len() {
            assert_eq!(
                both.increments[i],
                one.increments[i] + two.increments[i],
                "at {i}"
            );
        }
    }

    #[test]
    fn recorded_jump_counts_are_poisson_with_integrated_tail_mean() {
        let model = levy_model(vec![StableLaw::new(1.0, 2.0).unwrap()]);
        let scheme = SamplingScheme::new(1.0, 1e-3).unwrap();
        let u = 0.05;
        let mu = integrated_tail(&model, u, scheme.n() as f64 * scheme.delta).unwrap();
        let reps = 100;
        let mut stat = 0.0;
        for r in 0..reps {
            let series = simulate_path(
                &model,
                &scheme,
                SimulationMode::JumpResolved { floor: 1e-3 },
                1000 + r,
            )
            .unwrap();
            let v = series
                .jump_record
                .as_ref()
                .unwrap()
                .jumps
                .iter()
                .filter(|(_, s)| s.abs() > u)
                .count() as f64;
            stat += (v - mu) * (v - mu) / mu;
        }
        // dispersion statistic is chi-square with `reps` dof under the
        // Poisson(mu) hypothesis
        let cdf = crate::stats::chi2_cdf(stat, reps as f64);
        let p = 2.0 * cdf.min(1.0 - cdf);
        assert!(p > 0.01, "dispersion stat {stat} over {reps} reps, p={p}");
    }

    #[test]
    fn heston_variance_nonnegative_with_mean_near_eta() {
        let vol = VolatilitySpec::HestonJump {
            kappa: 5.0,
            eta: 0.0625,
            gamma_vol: 0.5,
            rho_corr: -0.5,
            v0: 0.0625,
            jump_intensity: 10.0,
            jump_half_width: 0.3,
        };
        let scheme = SamplingScheme::new(100.0, 0.01).unwrap();
        let path = variance_path(&vol, &scheme, 5).unwrap();
        assert!(path.iter().all(|v| *v >= 0.0));
        let mean = path.iter().sum::<f64>() / path.len() as f64;
        // volatility jumps are mark-symmetric, so the long-run mean stays
        // near eta
        assert!((mean - 0.0625).abs() < 0.1 * 0.0625, "long-run mean {mean}");
    }

    #[test]
    fn integrated_tail_examples() {
        let single = levy_model(vec![StableLaw::new(1.0, 1.0).unwrap()]);
        assert!((integrated_tail(&single, 0.1, 1.0).unwrap() - 10.0).abs() < 1e-12);
        let two = levy_model(vec![
            StableLaw::new(1.0, 1.0).unwrap(),
            StableLaw::new(0.75, 1.0).unwrap(),
        ]);
        // 2 (100 + 0.01^{-0.75}) evaluated directly
        let want = 2.0 * (100.0 + 0.01f64.powf(-0.75));
        let got = integrated_tail(&two, 0.01, 2.0).unwrap();
        assert!((got - want).abs() < 1e-9);
        assert!((got - 263.2455532033676).abs() < 1e-6);
        // unit threshold: t Σ aᵢ
        assert!((integrated_tail(&two, 1.0, 2.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn floor_guard_rejects_coarse_floors() {
        // β = 0.5, a = 1, floor = 1: sigma(floor)/floor ≈ 0.58
        let model = levy_model(vec![StableLaw::new(0.5, 1.0).unwrap()]);
        let scheme = SamplingScheme::new(1.0, 0.01).unwrap();
        assert!(simulate_path(
            &model,
            &scheme,
            SimulationMode::JumpResolved { floor: 1.0 },
            1
        )
        .is_err());
        assert!(simulate_path(
            &model,
            &scheme,
            SimulationMode::JumpResolved { floor: 0.0 },
            1
        )
        .is_err());
    }

    #[test]
    fn dump_round_trip_is_bit_exact() {
        let model = levy_model(vec![StableLaw::new(1.2, 1.0).unwrap()]);
        let scheme = SamplingScheme::new(0.1, 1e-3).unwrap();
        let series = simulate_path(&model, &scheme, SimulationMode::ExactIncrement, 3).unwrap();
        let mut buf = Vec::new();
        write_increments_to(&mut buf, &series).unwrap();
        let back = read_increments_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.delta.to_bits(), series.delta.to_bits());
        assert_eq!(back.increments.len(), series.increments.len());
        for (a, b) in back.increments.iter().zip(&series.increments) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
