use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

use super::{lit, StatsError};

/// Five-number summary plus mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats<F> {
    pub n: usize,
    pub min: F,
    pub q1: F,
    pub median: F,
    pub mean: F,
    pub q3: F,
    pub max: F,
    /// Sample standard deviation (n − 1 denominator); 0 when n = 1.
    pub sd: F,
    /// Set when sd is undefined (a single observation).
    pub degenerate: bool,
}

/// Hyndman–Fan type 7 quantile of already-sorted data:
/// h = (n − 1)p + 1, linear interpolation between neighbouring order statistics.
pub fn quantile_type7<F: Float + FromPrimitive>(sorted: &[F], p: F) -> Result<F, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(p >= F::zero() && p <= F::one()) {
        return Err(StatsError::Domain("quantile probability outside [0, 1]".into()));
    }
    let h = lit::<F>((sorted.len() - 1) as f64) * p;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0);
    if i + 1 >= sorted.len() {
        return Ok(sorted[sorted.len() - 1]);
    }
    let frac = h - lo;
    Ok(sorted[i] + frac * (sorted[i + 1] - sorted[i]))
}

pub fn summarize<F: Float + FromPrimitive>(values: &[F]) -> Result<SummaryStats<F>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(StatsError::Domain("NaN in summary input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let nf = lit::<F>(n as f64);
    let mean = sorted.iter().fold(F::zero(), |acc, &v| acc + v) / nf;
    let (sd, degenerate) = if n < 2 {
        (F::zero(), true)
    } else {
        let ss = sorted.iter().fold(F::zero(), |acc, &v| acc + (v - mean) * (v - mean));
        ((ss / lit((n - 1) as f64)).sqrt(), false)
    };
    Ok(SummaryStats {
        n,
        min: sorted[0],
        q1: quantile_type7(&sorted, lit(0.25))?,
        median: quantile_type7(&sorted, lit(0.5))?,
        mean,
        q3: quantile_type7(&sorted, lit(0.75))?,
        max: sorted[n - 1],
        sd,
        degenerate,
    })
}
