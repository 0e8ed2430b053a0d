use num_traits::{Float, FromPrimitive};

use super::{lit, StatsError};

/// Pearson product-moment correlation.
pub fn pearson<F: Float + FromPrimitive>(x: &[F], y: &[F]) -> Result<F, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort { need: 2, got: x.len() });
    }
    let n = lit::<F>(x.len() as f64);
    let mx = x.iter().fold(F::zero(), |a, &v| a + v) / n;
    let my = y.iter().fold(F::zero(), |a, &v| a + v) / n;
    let (mut sxy, mut sxx, mut syy) = (F::zero(), F::zero(), F::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == F::zero() {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == F::zero() {
        return Err(StatsError::ZeroVariance("y"));
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-F::one()).min(F::one()))
}
