//! Two-stage estimation of the successive jump-activity indices.
//!
//! Stage one (`preliminary_estimate`) turns tail counts at a base threshold
//! u_n and its γ-multiple into log-ratio estimates, index by index, peeling
//! off already-estimated components through an alternating subset sum. The
//! rates are very slow and the estimates are biased toward lower β.
//!
//! Stage two (`final_estimate`) fits the multi-power-law model
//! U(v_l u_n) ≈ Σᵢ γᵢ/(v_l u_n)^{xᵢ} over an L-point multiplier grid by
//! weighted least squares: the contrast is minimized over the exponents with
//! the intensities profiled out exactly (the contrast is linear in them),
//! using multistart Nelder–Mead inside the ordered domain
//! 0 ≤ x_j ≤ … ≤ x₁ ≤ 2.

use crate::counts::{self, Side, TailCountCurve};
use crate::error::{Result, SbgError};
use crate::optim;
use crate::simulate::{IncrementSeries, SamplingScheme};
use serde::{Deserialize, Serialize};

/// How the base truncation level u_n is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UAnchor {
    /// Theory schedule u_n = K·Δ^ρ (ρ from the config).
    DeltaPower { k: f64 },
    /// Practical schedule u_n = α·√(η̂·Δ), a multiple of the long-run
    /// diffusive move over one step.
    RootEtaDelta { alpha: f64, eta_hat: f64 },
    /// Explicit threshold.
    Explicit { u: f64 },
}

/// Configuration of the preliminary (log-ratio) estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrelimConfig {
    /// Number of indices to estimate.
    pub j: usize,
    /// Count ratio γ > 1 between the two thresholds of each log ratio.
    pub gamma: f64,
    /// Assumed minimal separation ε between consecutive indices.
    pub epsilon: f64,
    /// Exponent of the theory threshold schedule; 2/11 is safe for every
    /// β₁ < 2.
    pub rho: f64,
    pub u_anchor: UAnchor,
}

impl Default for PrelimConfig {
    fn default() -> Self {
        PrelimConfig {
            j: 2,
            gamma: 2.0,
            epsilon: 0.1,
            rho: 2.0 / 11.0,
            u_anchor: UAnchor::DeltaPower { k: 1.0 },
        }
    }
}

impl PrelimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j < 1 {
            return Err(SbgError::Domain("need at least one index".into()));
        }
        if !(self.gamma > 1.0) {
            return Err(SbgError::Domain(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(SbgError::Domain(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(SbgError::Domain(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Base truncation level for a sampling design.
pub fn default_threshold(scheme: &SamplingScheme, config: &PrelimConfig) -> f64 {
    match config.u_anchor {
        UAnchor::DeltaPower { k } => k * scheme.delta.powf(config.rho),
        UAnchor::RootEtaDelta { alpha, eta_hat } => alpha * (eta_hat * scheme.delta).sqrt(),
        UAnchor::Explicit { u } => u,
    }
}

/// Auxiliary thresholds u_{n,i} = u_n^{(ε/2)^{i−1}}, i = 1..j. They increase
/// toward 1, which is why u_n ≥ 1 is rejected.
pub fn aux_thresholds(u_n: f64, epsilon: f64, j: usize) -> Result<Vec<f64>> {
    if !(u_n > 0.0 && u_n < 1.0) {
        return Err(SbgError::Domain(format!(
            "base threshold must lie in (0, 1), got {u_n}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(SbgError::Domain("epsilon must be positive".into()));
    }
    Ok((0..j)
        .map(|i| u_n.powf((0.5 * epsilon).powi(i as i32)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateStatus {
    Ok,
    /// A negative intensity estimate was replaced by 0.
    Clipped,
    /// The defining counts were not positive; no value is reported.
    Failed,
}

/// One (β̂ᵢ, Γ̂ᵢ) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub status: EstimateStatus,
}

impl IndexEstimate {
    fn failed() -> Self {
        IndexEstimate {
            beta: None,
            gamma: None,
            status: EstimateStatus::Failed,
        }
    }
}

/// Convergence bookkeeping of the contrast minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDiagnostics {
    pub starts: usize,
    pub converged_starts: usize,
    pub best_start: usize,
    pub total_iterations: usize,
}

/// Estimated (β̂ᵢ, Γ̂ᵢ) pairs with status flags; produced by both stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub entries: Vec<IndexEstimate>,
    /// Thresholds the estimates were computed from (u_{n,i} for the
    /// preliminary stage, the v_l u_n grid for the final stage).
    pub thresholds: Vec<f64>,
    /// Contrast value at the optimum (final stage only).
    pub contrast: Option<f64>,
    pub optimizer: Option<OptimizerDiagnostics>,
}

/// First-stage estimators: log count ratios at (u_{n,i}, γ u_{n,i}), with the
/// contribution of already-estimated indices removed by the alternating
/// subset sum. A nonpositive count anywhere marks that index (and its
/// successors) as failed; no sentinel value is ever reported.
pub fn preliminary_estimate(
    series: &IncrementSeries,
    scheme: &SamplingScheme,
    config: &PrelimConfig,
) -> Result<EstimateSet> {
    config.validate()?;
    let u_n = default_threshold(scheme, config);
    let thresholds = aux_thresholds(u_n, config.epsilon, config.j)?;
    let ln_gamma_ratio = config.gamma.ln();
    let count =
        |u: f64| -> Result<f64> { Ok(counts::count_increments(series, u, Side::Absolute)? as f64) };

    let mut entries: Vec<IndexEstimate> = Vec::with_capacity(config.j);
    let mut betas: Vec<f64> = Vec::new();
    let mut gammas: Vec<f64> = Vec::new();

    for k in 1..=config.j {
        let u_k = thresholds[k - 1];
        if entries.iter().any(|e| e.status == EstimateStatus::Failed) {
            entries.push(IndexEstimate::failed());
            continue;
        }
        // elementary symmetric sums e_l of {γ^{β̃₁}, …, γ^{β̃_{k−1}}}
        let mut coeffs = vec![1.0f64];
        for b in &betas {
            let g = config.gamma.powf(*b);
            let mut next = vec![0.0; coeffs.len() + 1];
            for (idx, c) in coeffs.iter().enumerate() {
                next[idx] += c;
                next[idx + 1] += c * g;
            }
            coeffs = next;
        }
        let alternating = |x_mult: f64| -> Result<f64> {
            let mut acc = 0.0;
            for (l, c) in coeffs.iter().enumerate() {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * c * count(x_mult * config.gamma.powi(l as i32) * u_k)?;
            }
            Ok(acc)
        };
        let at_one = alternating(1.0)?;
        let at_gamma = alternating(config.gamma)?;
        if at_one > 0.0 && at_gamma > 0.0 {
            let beta_k = (at_one / at_gamma).ln() / ln_gamma_ratio;
            let gamma_k = if k == 1 {
                u_k.powf(beta_k) * at_one
            } else {
                let mut residual = count(u_k)?;
                for (b, g) in betas.iter().zip(&gammas) {
                    residual -= g * u_k.powf(-b);
                }
                u_k.powf(beta_k) * residual
            };
            betas.push(beta_k);
            gammas.push(gamma_k);
            entries.push(IndexEstimate {
                beta: Some(beta_k),
                gamma: Some(gamma_k),
                status: EstimateStatus::Ok,
            });
        } else {
            entries.push(IndexEstimate::failed());
        }
    }

    Ok(EstimateSet {
        entries,
        thresholds,
        contrast: None,
        optimizer: None,
    })
}

/// Replace negative intensity estimates by 0 (marking them clipped) and
/// reorder the non-failed pairs so the β̂ sequence decreases, relabeling the
/// Γ̂ accordingly. Failed entries sink to the end. Idempotent.
pub fn sanitize(est: &EstimateSet) -> EstimateSet {
    let mut entries: Vec<IndexEstimate> = est
        .entries
        .iter()
        .map(|e| {
            let mut e = *e;
            if let Some(g) = e.gamma {
                if g < 0.0 {
                    e.gamma = Some(0.0);
                    if e.status == EstimateStatus::Ok {
                        e.status = EstimateStatus::Clipped;
                    }
                }
            }
            e
        })
        .collect();
    entries.sort_by(|a, b| {
        let ka = a.beta.unwrap_or(f64::NEG_INFINITY);
        let kb = b.beta.unwrap_or(f64::NEG_INFINITY);
        kb.total_cmp(&ka)
    });
    EstimateSet {
        entries,
        thresholds: est.thresholds.clone(),
        contrast: est.contrast,
        optimizer: est.optimizer,
    }
}

/// Estimated number of indices: stop at the first i with
/// β̃ᵢ ≤ ε + β̃₁/2 (failures count as violations) and report i − 1.
pub fn stop_rule(est: &EstimateSet, epsilon: f64) -> usize {
    let Some(beta_1) = est.entries.first().and_then(|e| e.beta) else {
        return 0;
    };
    let cutoff = epsilon + 0.5 * beta_1;
    for (i, e) in est.entries.iter().enumerate() {
        let passes = matches!(e.beta, Some(b) if b > cutoff);
        if !passes {
            return i;
        }
    }
    est.entries.len()
}

/// The first-stage asymptotic bias constant H_i (1-based i < j):
/// H_i = A^{i+1}/(A^i log γ) · Π_{l≤i}(γ^{β_l−β_{i+1}}−1) / Π_{l≤i−1}(γ^{β_l−β_i}−1).
pub fn bias_constant(betas: &[f64], intensities: &[f64], i: usize, gamma: f64) -> Result<f64> {
    if betas.len() != intensities.len() {
        return Err(SbgError::Domain(
            "betas and intensities must have equal length".into(),
        ));
    }
    if i < 1 || i + 1 > betas.len() {
        return Err(SbgError::Domain(format!(
            "bias constant is defined for 1 <= i <= j-1, got i={i} with j={}",
            betas.len()
        )));
    }
    if !(gamma > 1.0) {
        return Err(SbgError::Domain("gamma must exceed 1".into()));
    }
    for pair in betas.windows(2) {
        if !(pair[0] > pair[1]) {
            return Err(SbgError::Domain("betas must be strictly decreasing".into()));
        }
    }
    if intensities.iter().any(|a| !(*a > 0.0)) {
        return Err(SbgError::Domain("intensities must be positive".into()));
    }
    let mut numerator = 1.0;
    for l in 0..i {
        numerator *= gamma.powf(betas[l] - betas[i]) - 1.0;
    }
    let mut denominator = 1.0;
    for l in 0..i.saturating_sub(1) {
        denominator *= gamma.powf(betas[l] - betas[i - 1]) - 1.0;
    }
    Ok(intensities[i] / (intensities[i - 1] * gamma.ln()) * numerator / denominator)
}

/// Configuration of the second-stage contrast fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastConfig {
    /// Threshold multipliers 1 = v₁ < v₂ < … < v_L.
    pub v_grid: Vec<f64>,
    /// Positive weights w_l, one per multiplier.
    pub weights: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub multistarts: usize,
    /// Optional half-width of the exponent box around the preliminary
    /// estimates (the intensities stay profiled, constrained to ≥ 0).
    pub exponent_box: Option<f64>,
}

impl Default for ContrastConfig {
    fn default() -> Self {
        let v_grid = default_v_grid();
        let weights = vec![1.0; v_grid.len()];
        ContrastConfig {
            v_grid,
            weights,
            tolerance: 1e-8,
            max_iterations: 500,
            multistarts: 8,
            exponent_box: None,
        }
    }
}

/// The 10 default multipliers {7, 10, 15, 20, 30, 40, 60, 80, 90, 120}/7,
/// normalized so v₁ = 1.
pub fn default_v_grid() -> Vec<f64> {
    [7.0, 10.0, 15.0, 20.0, 30.0, 40.0, 60.0, 80.0, 90.0, 120.0]
        .iter()
        .map(|a| a / 7.0)
        .collect()
}

impl ContrastConfig {
    /// Preset putting less weight on the larger truncation levels, where
    /// fewer increments contribute: w_l = 1/v_l.
    pub fn with_decreasing_weights(mut self) -> Self {
        self.weights = self.v_grid.iter().map(|v| 1.0 / v).collect();
        self
    }

    pub fn validate(&self, j: usize) -> Result<()> {
        let l = self.v_grid.len();
        if l != self.weights.len() {
            return Err(SbgError::Domain(
                "one weight per threshold multiplier is required".into(),
            ));
        }
        if l < 2 * j {
            return Err(SbgError::Domain(format!(
                "need at least 2j = {} multipliers, got {l}",
                2 * j
            )));
        }
        if (self.v_grid[0] - 1.0).abs() > 1e-12 {
            return Err(SbgError::Domain("the first multiplier must be 1".into()));
        }
        for pair in self.v_grid.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(SbgError::Domain(
                    "multipliers must be strictly increasing".into(),
                ));
            }
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(SbgError::Domain("weights must be positive".into()));
        }
        Ok(())
    }
}

fn check_params_domain(params: &[(f64, f64)]) -> Result<()> {
    for (x, g) in params {
        if !(*x >= 0.0 && *x <= 2.0) {
            return Err(SbgError::Domain(format!(
                "exponent {x} outside [0, 2]"
            )));
        }
        if !(*g >= 0.0) {
            return Err(SbgError::Domain(format!("intensity {g} negative")));
        }
    }
    Ok(())
}

/// The contrast Φ = Σ_l w_l (U_l − Σᵢ γᵢ/t_l^{xᵢ})² over the curve's
/// thresholds t_l. Symmetric in the (xᵢ, γᵢ) pairs.
pub fn contrast_value(
    curve: &TailCountCurve,
    config: &ContrastConfig,
    params: &[(f64, f64)],
) -> Result<f64> {
    if curve.len() != config.weights.len() {
        return Err(SbgError::Domain(
            "curve length does not match the weight vector".into(),
        ));
    }
    check_params_domain(params)?;
    let mut acc = 0.0;
    for (l, (t, u)) in curve.thresholds().iter().zip(curve.counts()).enumerate() {
        let model: f64 = params.iter().map(|(x, g)| g / t.powf(*x)).sum();
        let r = u - model;
        acc += config.weights[l] * r * r;
    }
    Ok(acc)
}

/// Minimize the contrast over the intensities for fixed exponents: a
/// nonnegativity-constrained weighted linear least-squares solve on the
/// design (t_l)^{−xᵢ}.
pub fn profile_gammas(
    curve: &TailCountCurve,
    config: &ContrastConfig,
    exponents: &[f64],
) -> Result<Vec<f64>> {
    if curve.len() != config.weights.len() {
        return Err(SbgError::Domain(
            "curve length does not match the weight vector".into(),
        ));
    }
    let design: Vec<Vec<f64>> = curve
        .thresholds()
        .iter()
        .map(|t| exponents.iter().map(|x| t.powf(-x)).collect())
        .collect();
    optim::nnls_weighted(&design, curve.counts(), &config.weights)
}

/// Map unconstrained simplex coordinates onto the ordered exponent domain:
/// x₁ = s₁ clamped to [0, 2], then xᵢ = xᵢ₋₁ − |sᵢ|, clamped below at 0 and
/// optionally into the box around the preliminary values.
fn exponents_from_coords(s: &[f64], box_constraint: Option<(&[f64], f64)>) -> Vec<f64> {
    let mut xs = Vec::with_capacity(s.len());
    let mut upper = 2.0f64;
    for (i, si) in s.iter().enumerate() {
        let mut x = if i == 0 {
            si.clamp(0.0, 2.0)
        } else {
            (upper - si.abs()).max(0.0)
        };
        if let Some((centers, w)) = box_constraint {
            if let Some(c) = centers.get(i) {
                x = x.clamp((c - w).max(0.0), (c + w).min(2.0));
            }
        }
        x = x.min(upper);
        xs.push(x);
        upper = x;
    }
    xs
}

/// Second-stage estimator: minimize the contrast over the exponents by
/// multistart Nelder–Mead with the intensities profiled out at every
/// evaluation, starting from the preliminary estimates and deterministic
/// perturbations. Returns the best converged start (lowest contrast, ties by
/// start index); errors if no start converges.
///
/// The tail curve is built from the series at the thresholds v_l · u_n, with
/// u_n taken from the preliminary set.
pub fn final_estimate(
    series: &IncrementSeries,
    _scheme: &SamplingScheme,
    prelim: &EstimateSet,
    config: &ContrastConfig,
) -> Result<EstimateSet> {
    let u_n = *prelim
        .thresholds
        .first()
        .ok_or_else(|| SbgError::Domain("preliminary set carries no threshold".into()))?;
    let thresholds: Vec<f64> = config.v_grid.iter().map(|v| v * u_n).collect();
    let curve = counts::tail_curve(series, &thresholds, Side::Absolute)?;
    fit_curve(&curve, prelim, config)
}

/// Contrast minimization against an already-built tail curve whose
/// thresholds are the multiplier grid times the base level. This is the
/// computational core of [`final_estimate`]; it also accepts synthetic
/// (real-valued) curves.
pub fn fit_curve(
    curve: &TailCountCurve,
    prelim: &EstimateSet,
    config: &ContrastConfig,
) -> Result<EstimateSet> {
    let j = prelim.entries.len();
    if j == 0 || prelim.entries.iter().all(|e| e.beta.is_none()) {
        return Err(SbgError::PrelimFailed);
    }
    config.validate(j)?;
    let base = curve.thresholds()[0];
    for (t, v) in curve.thresholds().iter().zip(&config.v_grid) {
        if (t / base - v).abs() > 1e-9 * v {
            return Err(SbgError::Domain(
                "curve thresholds do not match the multiplier grid".into(),
            ));
        }
    }
    let thresholds = curve.thresholds().to_vec();

    // exponent starts: the sanitized preliminary values with failed slots
    // filled by interpolation toward β̃₁/2
    let mut prelim_betas: Vec<f64> = Vec::with_capacity(j);
    let first_ok = prelim
        .entries
        .iter()
        .find_map(|e| e.beta)
        .expect("checked above");
    for (i, e) in prelim.entries.iter().enumerate() {
        let fallback = (first_ok * (1.0 - 0.4 * i as f64 / j as f64)).clamp(0.05, 2.0);
        prelim_betas.push(e.beta.unwrap_or(fallback).clamp(0.0, 2.0));
    }
    prelim_betas.sort_by(|a, b| b.total_cmp(a));

    let box_centers = prelim_betas.clone();
    let box_constraint = config
        .exponent_box
        .map(|w| (box_centers.as_slice(), w));

    let coords_of = |xs: &[f64]| -> Vec<f64> {
        let mut s = Vec::with_capacity(xs.len());
        for (i, x) in xs.iter().enumerate() {
            if i == 0 {
                s.push(*x);
            } else {
                s.push((xs[i - 1] - x).max(0.0));
            }
        }
        s
    };

    let mut starts: Vec<Vec<f64>> = vec![coords_of(&prelim_betas)];
    // low-discrepancy coverage of the ordered domain for the other starts
    const PHI: f64 = 0.618033988749895;
    for m in 1..config.multistarts.max(1) {
        let top = 0.25 + 1.65 * ((m as f64 * PHI) % 1.0);
        let span = top * (0.2 + 0.75 * ((m as f64 * PHI * PHI) % 1.0));
        let xs: Vec<f64> = (0..j)
            .map(|i| {
                let frac = if j > 1 { i as f64 / (j - 1).max(1) as f64 } else { 0.0 };
                (top - span * frac).clamp(0.0, 2.0)
            })
            .collect();
        starts.push(coords_of(&xs));
    }

    let mut objective = |s: &[f64]| -> f64 {
        let xs = exponents_from_coords(s, box_constraint);
        match profile_gammas(curve, config, &xs) {
            Ok(gammas) => {
                let pairs: Vec<(f64, f64)> = xs.into_iter().zip(gammas).collect();
                contrast_value(curve, config, &pairs).unwrap_or(f64::INFINITY)
            }
            Err(_) => 1e250,
        }
    };

    let mut best: Option<(usize, optim::NelderMeadOutcome)> = None;
    let mut converged_starts = 0;
    let mut total_iterations = 0;
    for (idx, start) in starts.iter().enumerate() {
        let mut out = optim::nelder_mead(
            &mut objective,
            start,
            0.2,
            config.tolerance,
            config.max_iterations,
        );
        total_iterations += out.iterations;
        if out.converged && out.iterations < config.max_iterations {
            // refinement pass from the found point with a tighter simplex
            let remaining = config.max_iterations - out.iterations;
            let refined = optim::nelder_mead(
                &mut objective,
                &out.x,
                0.02,
                config.tolerance,
                remaining,
            );
            total_iterations += refined.iterations;
            if refined.value <= out.value {
                out = optim::NelderMeadOutcome {
                    converged: out.converged || refined.converged,
                    ..refined
                };
            }
        }
        if !out.converged {
            continue;
        }
        converged_starts += 1;
        let better = match &best {
            None => true,
            Some((_, cur)) => out.value < cur.value,
        };
        if better {
            best = Some((idx, out));
        }
    }

    let (best_start, outcome) = best.ok_or(SbgError::OptimizerFailed)?;
    let xs = exponents_from_coords(&outcome.x, box_constraint);
    let gammas = profile_gammas(curve, config, &xs)?;
    let params: Vec<(f64, f64)> = xs.iter().copied().zip(gammas.iter().copied()).collect();
    let contrast = contrast_value(curve, config, &params)?;

    Ok(EstimateSet {
        entries: xs
            .into_iter()
            .zip(gammas)
            .map(|(beta, gamma)| IndexEstimate {
                beta: Some(beta),
                gamma: Some(gamma),
                status: EstimateStatus::Ok,
            })
            .collect(),
        thresholds,
        contrast: Some(contrast),
        optimizer: Some(OptimizerDiagnostics {
            starts: starts.len(),
            converged_starts,
            best_start,
            total_iterations,
        }),
    })
}

/// Identifiability of each index given the (true or hypothesized) decreasing
/// β sequence: everything strictly above β₁/2 is identifiable, β₁/2 itself
/// sits on the boundary where the attainable rate degenerates to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Identifiability {
    Identifiable,
    Boundary,
    NotIdentifiable,
}

pub fn identifiable_indices(betas: &[f64]) -> Result<Vec<Identifiability>> {
    if betas.is_empty() {
        return Err(SbgError::Domain("no indices supplied".into()));
    }
    for b in betas {
        if !(*b > 0.0 && *b < 2.0) {
            return Err(SbgError::Domain(format!(
                "indices must lie in (0, 2), got {b}"
            )));
        }
    }
    for pair in betas.windows(2) {
        if !(pair[0] > pair[1]) {
            return Err(SbgError::Domain("indices must be strictly decreasing".into()));
        }
    }
    let half = 0.5 * betas[0];
    Ok(betas
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if i == 0 || *b > half {
                Identifiability::Identifiable
            } else if *b == half {
                Identifiability::Boundary
            } else {
                Identifiability::NotIdentifiable
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::IncrementSeries;

    fn series(increments: Vec<f64>) -> IncrementSeries {
        IncrementSeries {
            delta: 1e-4,
            increments,
            jump_record: None,
        }
    }

    fn scheme() -> SamplingScheme {
        SamplingScheme::new(1.0, 1e-4).unwrap()
    }

    #[test]
    fn default_threshold_schedules() {
        let s = SamplingScheme::new(1.0, 1e-4).unwrap();
        let cfg = PrelimConfig::default();
        let u = default_threshold(&s, &cfg);
        assert!((u - (1e-4f64).powf(2.0 / 11.0)).abs() < 1e-15);
        assert!((u - 0.187381742286).abs() < 1e-5);

        let s2 = SamplingScheme::new(1.0, 0.01).unwrap();
        let practical = PrelimConfig {
            u_anchor: UAnchor::RootEtaDelta {
                alpha: 7.0,
                eta_hat: 0.0625,
            },
            ..PrelimConfig::default()
        };
        assert!((default_threshold(&s2, &practical) - 0.175).abs() < 1e-12);

        // ρ → 0 sends the theory threshold to K
        let flat = PrelimConfig {
            rho: 1e-12,
            u_anchor: UAnchor::DeltaPower { k: 0.3 },
            ..PrelimConfig::default()
        };
        assert!((default_threshold(&s, &flat) - 0.3).abs() < 1e-9);
    }

    #[test]
    fn aux_threshold_values() {
        let u = aux_thresholds(0.01, 0.1, 3).unwrap();
        assert_eq!(u[0], 0.01);
        assert!((u[1] - 0.01f64.powf(0.05)).abs() < 1e-15);
        assert!((u[1] - 0.794328).abs() < 1e-5);
        assert!(u[0] < u[1] && u[1] < u[2] && u[2] < 1.0);
        assert!(aux_thresholds(1.0, 0.1, 2).is_err());
        assert!(aux_thresholds(1.5, 0.1, 2).is_err());
    }

    #[test]
    fn preliminary_matches_hand_arithmetic() {
        // counts: 800 above 0.01, of which 400 above 0.02
        let mut incs = vec![0.015; 400];
        incs.extend(vec![0.03; 400]);
        incs.extend(vec![1e-6; 1000]);
        let s = series(incs);
        let cfg = PrelimConfig {
            j: 1,
            u_anchor: UAnchor::Explicit { u: 0.01 },
            ..PrelimConfig::default()
        };
        let est = preliminary_estimate(&s, &scheme(), &cfg).unwrap();
        let e = &est.entries[0];
        assert_eq!(e.status, EstimateStatus::Ok);
        assert!((e.beta.unwrap() - 1.0).abs() < 1e-12);
        assert!((e.gamma.unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn preliminary_zero_count_fails() {
        // nothing above γ·u_n = 0.02
        let s = series(vec![0.015; 50]);
        let cfg = PrelimConfig {
            j: 2,
            u_anchor: UAnchor::Explicit { u: 0.01 },
            ..PrelimConfig::default()
        };
        let est = preliminary_estimate(&s, &scheme(), &cfg).unwrap();
        assert_eq!(est.entries[0].status, EstimateStatus::Failed);
        assert!(est.entries[0].beta.is_none());
        // failure propagates to the second index
        assert_eq!(est.entries[1].status, EstimateStatus::Failed);
    }

    #[test]
    fn sanitize_clips_and_reorders() {
        let est = EstimateSet {
            entries: vec![
                IndexEstimate {
                    beta: Some(0.9),
                    gamma: Some(-0.3),
                    status: EstimateStatus::Ok,
                },
                IndexEstimate {
                    beta: Some(1.4),
                    gamma: Some(2.0),
                    status: EstimateStatus::Ok,
                },
            ],
            thresholds: vec![0.01],
            contrast: None,
            optimizer: None,
        };
        let clean = sanitize(&est);
        assert_eq!(clean.entries[0].beta, Some(1.4));
        assert_eq!(clean.entries[0].gamma, Some(2.0));
        assert_eq!(clean.entries[1].beta, Some(0.9));
        assert_eq!(clean.entries[1].gamma, Some(0.0));
        assert_eq!(clean.entries[1].status, EstimateStatus::Clipped);
        // idempotent
        assert_eq!(sanitize(&clean), clean);
    }

    #[test]
    fn sanitize_is_identity_on_valid_sets() {
        let est = EstimateSet {
            entries: vec![
                IndexEstimate {
                    beta: Some(1.4),
                    gamma: Some(2.0),
                    status: EstimateStatus::Ok,
                },
                IndexEstimate {
                    beta: Some(0.9),
                    gamma: Some(1.0),
                    status: EstimateStatus::Ok,
                },
            ],
            thresholds: vec![0.01],
            contrast: None,
            optimizer: None,
        };
        assert_eq!(sanitize(&est), est);
    }

    fn entry(beta: f64) -> IndexEstimate {
        IndexEstimate {
            beta: Some(beta),
            gamma: Some(1.0),
            status: EstimateStatus::Ok,
        }
    }

    #[test]
    fn stop_rule_examples() {
        let est = EstimateSet {
            entries: vec![entry(1.4), entry(0.9), entry(0.72)],
            thresholds: vec![],
            contrast: None,
            optimizer: None,
        };
        assert_eq!(stop_rule(&est, 0.1), 2);

        let all_high = EstimateSet {
            entries: vec![entry(1.4), entry(1.2)],
            thresholds: vec![],
            contrast: None,
            optimizer: None,
        };
        assert_eq!(stop_rule(&all_high, 0.1), 2);

        let failed_first = EstimateSet {
            entries: vec![IndexEstimate::failed()],
            thresholds: vec![],
            contrast: None,
            optimizer: None,
        };
        assert_eq!(stop_rule(&failed_first, 0.1), 0);
    }

    #[test]
    fn bias_constant_values() {
        // j = 1: no H_i exists
        assert!(bias_constant(&[1.0], &[1.0], 1, 2.0).is_err());
        let h = bias_constant(&[1.0, 0.75], &[2.0, 1.0], 1, 2.0).unwrap();
        assert!((h - 0.13648).abs() < 1e-5, "H1 = {h}");
        // always positive for decreasing betas
        let h2 = bias_constant(&[1.8, 1.2, 1.0], &[1.0, 3.0, 0.5], 2, 3.0).unwrap();
        assert!(h2 > 0.0);
    }

    fn power_law_curve(
        thresholds: &[f64],
        params: &[(f64, f64)],
    ) -> TailCountCurve {
        let counts: Vec<f64> = thresholds
            .iter()
            .map(|t| params.iter().map(|(x, g)| g / t.powf(*x)).sum())
            .collect();
        TailCountCurve::new(thresholds.to_vec(), counts).unwrap()
    }

    #[test]
    fn contrast_examples() {
        let curve = TailCountCurve::new(vec![0.01, 0.02], vec![200.0, 100.0]).unwrap();
        let cfg = ContrastConfig {
            v_grid: vec![1.0, 2.0],
            weights: vec![1.0, 1.0],
            ..ContrastConfig::default()
        };
        assert!(contrast_value(&curve, &cfg, &[(1.0, 2.0)]).unwrap() < 1e-20);
        assert!(
            (contrast_value(&curve, &cfg, &[(1.0, 0.0)]).unwrap() - 50_000.0).abs() < 1e-9
        );
        // symmetric under pair permutation
        let p1 = [(1.0, 1.5), (0.5, 0.4)];
        let p2 = [(0.5, 0.4), (1.0, 1.5)];
        assert_eq!(
            contrast_value(&curve, &cfg, &p1).unwrap(),
            contrast_value(&curve, &cfg, &p2).unwrap()
        );
        assert!(contrast_value(&curve, &cfg, &[(2.5, 1.0)]).is_err());
        assert!(contrast_value(&curve, &cfg, &[(1.0, -0.1)]).is_err());
    }

    #[test]
    fn profile_recovers_exact_fit() {
        let curve = TailCountCurve::new(vec![0.01, 0.02], vec![200.0, 100.0]).unwrap();
        let cfg = ContrastConfig {
            v_grid: vec![1.0, 2.0],
            weights: vec![1.0, 1.0],
            ..ContrastConfig::default()
        };
        let g = profile_gammas(&curve, &cfg, &[1.0]).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn profile_duplicate_exponents_is_rank_deficient() {
        let curve = TailCountCurve::new(vec![0.01, 0.02, 0.04], vec![200.0, 100.0, 50.0]).unwrap();
        let cfg = ContrastConfig {
            v_grid: vec![1.0, 2.0, 4.0],
            weights: vec![1.0, 1.0, 1.0],
            ..ContrastConfig::default()
        };
        match profile_gammas(&curve, &cfg, &[1.0, 1.0]) {
            Err(SbgError::RankDeficient) => {}
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn profile_beats_random_gammas() {
        let thresholds: Vec<f64> = (1..=10).map(|i| 0.01 * i as f64).collect();
        let curve = power_law_curve(&thresholds, &[(1.1, 4.0), (0.6, 2.0)]);
        // perturb the counts so the fit is not exact but stays monotone
        let noisy: Vec<f64> = curve
            .counts()
            .iter()
            .enumerate()
            .map(|(i, c)| c * (1.0 + 0.02 * ((i as f64 * 0.7).sin())))
            .collect();
        let mut sorted = noisy.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let curve = TailCountCurve::new(thresholds.clone(), sorted).unwrap();
        let cfg = ContrastConfig {
            v_grid: thresholds.iter().map(|t| t / thresholds[0]).collect(),
            weights: vec![1.0; thresholds.len()],
            ..ContrastConfig::default()
        };
        let exps = [1.1, 0.6];
        let profiled = profile_gammas(&curve, &cfg, &exps).unwrap();
        let params: Vec<(f64, f64)> = exps.iter().copied().zip(profiled).collect();
        let best = contrast_value(&curve, &cfg, &params).unwrap();
        // dense grid oracle over γ
        let mut rng_state = 88172645463325252u64;
        let mut next = || {
            // xorshift is plenty for a grid oracle
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10_000 {
            let candidate = [(exps[0], next() * 10.0), (exps[1], next() * 10.0)];
            let value = contrast_value(&curve, &cfg, &candidate).unwrap();
            assert!(value >= best - 1e-9 * best.abs().max(1.0));
        }
    }

    fn prelim_set(betas: &[f64], u_n: f64) -> EstimateSet {
        EstimateSet {
            entries: betas.iter().map(|b| entry(*b)).collect(),
            thresholds: vec![u_n],
            contrast: None,
            optimizer: None,
        }
    }

    #[test]
    fn final_estimate_recovers_noiseless_curve() {
        // counts generated exactly from two power laws on the default grid
        let u_n = 0.01;
        let cfg = ContrastConfig::default();
        let thresholds: Vec<f64> = cfg.v_grid.iter().map(|v| v * u_n).collect();
        let truth = [(1.0, 10.0), (0.75, 5.0)];
        let curve = power_law_curve(&thresholds, &truth);
        // embed the counts in a synthetic series: place increments exactly
        // between thresholds: simplest is to go through the curve-based
        // helper below instead of a series, so use fit_curve directly.
        let est = fit_curve(&curve, &prelim_set(&[1.1, 0.6], u_n), &cfg).unwrap();
        let b1 = est.entries[0].beta.unwrap();
        let b2 = est.entries[1].beta.unwrap();
        let g1 = est.entries[0].gamma.unwrap();
        let g2 = est.entries[1].gamma.unwrap();
        assert!((b1 - 1.0).abs() < 1e-6, "b1={b1}");
        assert!((b2 - 0.75).abs() < 1e-6, "b2={b2}");
        assert!((g1 - 10.0).abs() < 1e-4, "g1={g1}");
        assert!((g2 - 5.0).abs() < 1e-4, "g2={g2}");
        assert!(est.contrast.unwrap() < 1e-12);
    }

    #[test]
    fn final_estimate_j1_matches_golden_section_oracle() {
        let u_n = 0.02;
        let cfg = ContrastConfig::default();
        let thresholds: Vec<f64> = cfg.v_grid.iter().map(|v| v * u_n).collect();
        // one power law plus mild curvature so the optimum is interior
        let counts: Vec<f64> = thresholds
            .iter()
            .map(|t| 3.0 / t.powf(0.9) + 0.3 / t.powf(0.2))
            .collect();
        let curve = TailCountCurve::new(thresholds, counts).unwrap();
        let est = fit_curve(&curve, &prelim_set(&[0.8], u_n), &cfg).unwrap();
        let fitted = est.entries[0].beta.unwrap();

        // golden-section oracle over the single exponent
        let objective = |x: f64| {
            let g = profile_gammas(&curve, &cfg, &[x]).unwrap();
            contrast_value(&curve, &cfg, &[(x, g[0])]).unwrap()
        };
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut c, mut d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        let (mut fc, mut fd) = (objective(c), objective(d));
        for _ in 0..200 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - phi * (hi - lo);
                fc = objective(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + phi * (hi - lo);
                fd = objective(d);
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!(
            (fitted - oracle).abs() < 1e-4,
            "fitted {fitted} vs golden-section {oracle}"
        );
    }

    #[test]
    fn final_estimate_descends_from_prelim() {
        let u_n = 0.01;
        let cfg = ContrastConfig::default();
        let thresholds: Vec<f64> = cfg.v_grid.iter().map(|v| v * u_n).collect();
        let curve = power_law_curve(&thresholds, &[(1.3, 7.0), (0.8, 2.0)]);
        let prelim = prelim_set(&[1.45, 0.7], u_n);
        let est = fit_curve(&curve, &prelim, &cfg).unwrap();
        // contrast at the optimum is no larger than at the (profiled)
        // preliminary exponents
        let g = profile_gammas(&curve, &cfg, &[1.45, 0.7]).unwrap();
        let at_start =
            contrast_value(&curve, &cfg, &[(1.45, g[0]), (0.7, g[1])]).unwrap();
        assert!(est.contrast.unwrap() <= at_start + 1e-12);
        let d = est.optimizer.unwrap();
        assert!(d.converged_starts >= 1);
        assert!(d.starts == cfg.multistarts);
    }

    #[test]
    fn final_estimate_requires_usable_prelim() {
        let u_n = 0.01;
        let cfg = ContrastConfig::default();
        let prelim = EstimateSet {
            entries: vec![IndexEstimate::failed(), IndexEstimate::failed()],
            thresholds: vec![u_n],
            contrast: None,
            optimizer: None,
        };
        let s = series(vec![0.05; 100]);
        match final_estimate(&s, &scheme(), &prelim, &cfg) {
            Err(SbgError::PrelimFailed) => {}
            other => panic!("expected PrelimFailed, got {other:?}"),
        }
    }

    #[test]
    fn identifiability_rule() {
        use Identifiability::*;
        assert_eq!(
            identifiable_indices(&[1.0, 0.75]).unwrap(),
            vec![Identifiable, Identifiable]
        );
        assert_eq!(
            identifiable_indices(&[1.6, 0.7]).unwrap(),
            vec![Identifiable, NotIdentifiable]
        );
        assert_eq!(
            identifiable_indices(&[1.0, 0.5]).unwrap(),
            vec![Identifiable, Boundary]
        );
        assert!(identifiable_indices(&[0.75, 1.0]).is_err());
        assert!(identifiable_indices(&[2.0, 1.0]).is_err());
        assert!(identifiable_indices(&[]).is_err());
    }
}
