//! Symmetric stable laws: the jump building block.
//!
//! A component is parametrized by its stability index β ∈ (0, 2) and its
//! two-sided tail intensity `a`, defined through the Lévy measure F by
//! a = lim_{u→0} u^β F([−u, u]^c). The Lévy density of such a component is
//! a′β/|x|^{1+β} with a′ = a/2, and its characteristic exponent is
//! −a′ C(β) |u|^β with C(β) = 2β ∫₀^∞ (1 − cos y) y^{−1−β} dy.

use crate::error::{Result, SbgError};
use crate::math;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

const LN_1E16: f64 = 36.841361487904734; // −ln(1e-16)

/// One symmetric stable jump component: index β and two-sided tail intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    /// Stability index in (0, 2).
    pub beta: f64,
    /// Tail intensity a = lim u^β F([−u,u]^c); twice the density coefficient.
    pub tail_intensity: f64,
}

impl StableLaw {
    pub fn new(beta: f64, tail_intensity: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 2.0) || !beta.is_finite() {
            return Err(SbgError::Domain(format!(
                "stability index must lie in (0, 2), got {beta}"
            )));
        }
        if !(tail_intensity > 0.0) || !tail_intensity.is_finite() {
            return Err(SbgError::Domain(format!(
                "tail intensity must be positive, got {tail_intensity}"
            )));
        }
        Ok(StableLaw {
            beta,
            tail_intensity,
        })
    }

    /// Density-parametrization coefficient a′ = a/2 (Lévy density a′β/|x|^{1+β}).
    pub fn density_coefficient(&self) -> f64 {
        0.5 * self.tail_intensity
    }

    /// Scale s such that the time-`dt` increment is s · S, with S standard
    /// symmetric stable (characteristic function exp(−|u|^β)).
    pub fn scale(&self, dt: f64) -> f64 {
        (self.density_coefficient() * math::stable_tail_constant(self.beta) * dt)
            .powf(1.0 / self.beta)
    }

    /// One draw of the time-`dt` increment of the component's Lévy process.
    /// `dt = 0` gives the degenerate increment 0.
    pub fn increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<f64> {
        if !(dt >= 0.0) {
            return Err(SbgError::Domain(format!("time step must be >= 0, got {dt}")));
        }
        if dt == 0.0 {
            return Ok(0.0);
        }
        Ok(self.scale(dt) * sample_standard_unchecked(self.beta, rng))
    }

    /// P(|Y_dt| ≥ x) for the component's time-`dt` increment, accurate to
    /// about 1e-6 absolute.
    pub fn tail_prob(&self, dt: f64, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(SbgError::Domain(format!(
                "threshold must be positive, got {x}"
            )));
        }
        if !(dt > 0.0) {
            return Err(SbgError::Domain(format!(
                "time step must be positive, got {dt}"
            )));
        }
        standard_tail_prob(self.beta, x / self.scale(dt))
    }
}

/// C(β) = 2β ∫₀^∞ (1 − cos y) y^{−1−β} dy, mapping the Lévy-density
/// coefficient to the characteristic exponent.
pub fn tail_constant(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 2.0) || !beta.is_finite() {
        return Err(SbgError::Domain(format!(
            "stability index must lie in (0, 2), got {beta}"
        )));
    }
    Ok(math::stable_tail_constant(beta))
}

/// One draw from the standard symmetric stable law with characteristic
/// function exp(−|u|^β), by the Chambers–Mallows–Stuck construction. The
/// β = 1 (Cauchy) case uses its closed form tan(V).
pub fn sample_standard<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<f64> {
    if !(beta > 0.0 && beta < 2.0) || !beta.is_finite() {
        return Err(SbgError::Domain(format!(
            "stability index must lie in (0, 2), got {beta}"
        )));
    }
    Ok(sample_standard_unchecked(beta, rng))
}

pub(crate) fn sample_standard_unchecked<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let v = (rng.random::<f64>() - 0.5) * std::f64::consts::PI;
    if beta == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let w = w.max(1e-300);
    let bv = beta * v;
    (bv.sin() / v.cos().powf(1.0 / beta)) * ((v - bv).cos() / w).powf((1.0 - beta) / beta)
}

/// P(|S| > z) for the standard symmetric stable law with index `alpha`.
///
/// Three regimes: the Cauchy closed form at α = 1, the power-tail series for
/// large z, and Gauss–Legendre panels on the characteristic-function
/// inversion elsewhere, cut off where exp(−u^α) < 1e-16.
pub fn standard_tail_prob(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(SbgError::Domain(format!(
            "stability index must lie in (0, 2), got {alpha}"
        )));
    }
    if z <= 0.0 {
        return Ok(1.0);
    }
    if (alpha - 1.0).abs() < 1e-9 {
        return Ok(1.0 - std::f64::consts::FRAC_2_PI * z.atan());
    }
    let z_series = if alpha <= 1.0 { 1.0 } else { 15.0 };
    if z >= z_series {
        tail_series(alpha, z)
    } else {
        tail_quadrature(alpha, z)
    }
}

/// Σ_k (2/π)(−1)^{k+1} Γ(kα)/k! sin(kπα/2) z^{−kα}. Convergent for α < 1,
/// asymptotic (stopped at the smallest term) for α > 1.
fn tail_series(alpha: f64, z: f64) -> Result<f64> {
    let ln_z = z.ln();
    let mut sum = 0.0;
    let mut prev_mag = f64::INFINITY;
    for k in 1..=500u32 {
        let kf = k as f64;
        let ln_mag = math::ln_gamma(kf * alpha) - math::ln_gamma(kf + 1.0) - kf * alpha * ln_z;
        // termination uses the phase-free magnitude: sin(kπα/2) vanishes for
        // some k at rational α without ending the series
        let mag = std::f64::consts::FRAC_2_PI * ln_mag.exp();
        if alpha > 1.0 && mag > prev_mag {
            // asymptotic regime: the series started diverging
            if mag > 1e-9 {
                return Err(SbgError::LossOfAccuracy(format!(
                    "stable tail series stalled at error {mag:e} (alpha={alpha}, z={z})"
                )));
            }
            break;
        }
        let phase = (kf * std::f64::consts::FRAC_PI_2 * alpha).sin();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * mag * phase;
        if mag < 1e-14 * sum.abs().max(1e-30) {
            break;
        }
        prev_mag = mag;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// 1 − (2/π) ∫₀^U sin(uz)/u · exp(−u^α) du. The exponential has a kink at
/// u = 0 for α < 1, so the unit neighbourhood is integrated on geometrically
/// graded panels; the rest uses half-period panels.
fn tail_quadrature(alpha: f64, z: f64) -> Result<f64> {
    let upper = LN_1E16.powf(1.0 / alpha);
    let integrand = |u: f64| {
        let w = u * z;
        let sinc = if w.abs() < 1e-4 {
            1.0 - w * w / 6.0
        } else {
            w.sin() / w
        };
        (-u.powf(alpha)).exp() * z * sinc
    };

    // graded panels on [0, 1∧U]: each dyadic shell is analytic and short
    let knee = upper.min(1.0);
    let mut graded = 0.0;
    let mut hi = knee;
    for _ in 0..54 {
        let lo = 0.5 * hi;
        graded += math::integrate_panels(integrand, lo, hi, 1);
        hi = lo;
    }
    graded += integrand(0.5 * hi) * hi; // remaining sliver, ~2^-54 wide

    let evaluate = |panels: usize| {
        graded + math::integrate_panels(integrand, knee, upper, panels)
    };
    let width = (std::f64::consts::PI / z).min((upper - knee).max(1e-9) / 16.0);
    let panels = (((upper - knee) / width).ceil() as usize).clamp(16, 4_000_000);
    let coarse = evaluate(panels);
    let fine = evaluate(2 * panels);
    if (coarse - fine).abs() > 5e-7 {
        return Err(SbgError::LossOfAccuracy(format!(
            "stable tail quadrature did not converge (alpha={alpha}, z={z})"
        )));
    }
    Ok((1.0 - std::f64::consts::FRAC_2_PI * fine).clamp(0.0, 1.0))
}

/// Find the tail intensity `a` such that the time-`dt` increment of the law
/// (beta, a) satisfies P(|Y_dt| ≥ threshold) = target, by bisection in log a
/// over [1e-12, 1e12]; relative tolerance 1e-8.
pub fn calibrate_intensity(beta: f64, dt: f64, threshold: f64, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(SbgError::Domain(format!(
            "target probability must lie in (0, 1), got {target}"
        )));
    }
    let (lo, hi) = (1e-12f64, 1e12f64);
    let prob = |a: f64| -> Result<f64> { StableLaw::new(beta, a)?.tail_prob(dt, threshold) };
    // tail probability is increasing in the intensity
    if prob(lo)? > target || prob(hi)? < target {
        return Err(SbgError::NoBracket { lo, hi });
    }
    let mut ln_lo = lo.ln();
    let mut ln_hi = hi.ln();
    for _ in 0..64 {
        let mid = 0.5 * (ln_lo + ln_hi);
        if prob(mid.exp())? < target {
            ln_lo = mid;
        } else {
            ln_hi = mid;
        }
        if ln_hi - ln_lo < 1e-10 {
            break;
        }
    }
    Ok((0.5 * (ln_lo + ln_hi)).exp())
}
