//! Threshold-exceedance statistics: the observable counts U(u, Δ)_T over the
//! increments and the oracle jump counts V(u)_T from a simulation's jump
//! record. Inequalities are strict throughout.

use crate::error::{Result, SbgError};
use crate::simulate::{IncrementSeries, JumpRecord};

/// Which tail of the increments to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    /// |ΔX| > u (the default; both tails).
    Absolute,
    /// ΔX > u.
    Positive,
    /// ΔX < −u.
    Negative,
}

impl Side {
    fn magnitude(&self, x: f64) -> f64 {
        match self {
            Side::Absolute => x.abs(),
            Side::Positive => x,
            Side::Negative => -x,
        }
    }
}

/// Exceedance counts along a strictly increasing threshold grid. Counts are
/// stored as reals: curves built from data hold whole numbers, synthetic
/// curves may hold any nonnegative values.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCountCurve {
    thresholds: Vec<f64>,
    counts: Vec<f64>,
}

impl TailCountCurve {
    /// Build a curve from explicit (threshold, value) data, checking that
    /// thresholds increase strictly and counts are nonnegative and
    /// nonincreasing.
    pub fn new(thresholds: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if thresholds.len() != counts.len() || thresholds.is_empty() {
            return Err(SbgError::Domain(
                "curve needs matching, nonempty thresholds and counts".into(),
            ));
        }
        validate_thresholds(&thresholds)?;
        for pair in counts.windows(2) {
            if pair[1] > pair[0] {
                return Err(SbgError::Domain(
                    "counts must be nonincreasing in the threshold".into(),
                ));
            }
        }
        if counts.iter().any(|c| *c < 0.0 || !c.is_finite()) {
            return Err(SbgError::Domain("counts must be finite and >= 0".into()));
        }
        Ok(TailCountCurve { thresholds, counts })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

fn validate_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.iter().any(|u| !(*u > 0.0)) {
        return Err(SbgError::Domain("thresholds must be positive".into()));
    }
    for pair in thresholds.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(SbgError::Domain(
                "thresholds must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

/// U(u, Δ)_T: the number of increments beyond `u` on the requested side.
pub fn count_increments(series: &IncrementSeries, u: f64, side: Side) -> Result<usize> {
    if !(u > 0.0) {
        return Err(SbgError::Domain(format!("threshold must be positive, got {u}")));
    }
    Ok(series
        .increments
        .iter()
        .filter(|x| side.magnitude(**x) > u)
        .count())
}

/// All counts along a threshold grid in one pass over the increments: each
/// increment is placed by binary search, then a suffix sum yields the curve.
pub fn tail_curve(series: &IncrementSeries, thresholds: &[f64], side: Side) -> Result<TailCountCurve> {
    validate_thresholds(thresholds)?;
    let m = thresholds.len();
    // histogram over "exceeds exactly the first k thresholds"
    let mut hist = vec![0u64; m + 1];
    for x in &series.increments {
        let v = side.magnitude(*x);
        let k = thresholds.partition_point(|t| *t < v);
        hist[k] += 1;
    }
    let mut counts = vec![0.0; m];
    let mut acc = 0u64;
    for i in (0..m).rev() {
        acc += hist[i + 1];
        counts[i] = acc as f64;
    }
    Ok(TailCountCurve {
        thresholds: thresholds.to_vec(),
        counts,
    })
}

/// V(u)_T: the number of recorded true jumps with |size| > u. Querying below
/// the simulation floor would undercount with certainty and is rejected.
pub fn count_true_jumps(record: &JumpRecord, u: f64) -> Result<usize> {
    if u < record.floor {
        return Err(SbgError::ThresholdBelowFloor {
            threshold: u,
            floor: record.floor,
        });
    }
    Ok(record.jumps.iter().filter(|(_, s)| s.abs() > u).count())
}
