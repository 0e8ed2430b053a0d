//! Survival functions for the F and studentized range distributions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use num_traits::{Float, FromPrimitive};

use super::quadrature::integrate_pieces;
use super::special::{incomplete_beta_regularized, ln_gamma, normal_cdf, normal_pdf};
use super::{lit, StatsError};

/// P(F > f) for F ~ F(d1, d2).
pub fn f_survival<F: Float + FromPrimitive>(f: F, d1: F, d2: F) -> Result<F, StatsError> {
    if !(d1 > F::zero() && d2 > F::zero()) {
        return Err(StatsError::Domain("F distribution needs positive degrees of freedom".into()));
    }
    if f.is_nan() {
        return Err(StatsError::Domain("F statistic is NaN".into()));
    }
    if f <= F::zero() {
        return Ok(F::one());
    }
    if f.is_infinite() {
        return Ok(F::zero());
    }
    let half = lit::<F>(0.5);
    incomplete_beta_regularized(d2 / (d2 + d1 * f), d2 * half, d1 * half)
}

const Z_LIMIT: f64 = 8.5;
// beyond this many degrees of freedom the scale factor is treated as exactly 1
const DF_INFINITE: f64 = 1e6;

/// P(range of k iid standard normals <= w).
fn normal_range_cdf<F: Float + FromPrimitive>(w: F, k: usize) -> F {
    if w <= F::zero() {
        return F::zero();
    }
    let km1 = (k - 1) as i32;
    let kf = lit::<F>(k as f64);
    let integrand = |z: F| normal_pdf(z) * (normal_cdf(z) - normal_cdf(z - w)).powi(km1);
    let zl = lit::<F>(Z_LIMIT);
    let mut breaks = vec![-zl, lit(-3.0), lit(-1.0), F::zero(), lit(1.0), lit(3.0), zl];
    let mid = w * lit(0.5);
    if mid.abs() < zl {
        breaks.push(mid);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let p = kf * integrate_pieces(integrand, &breaks, lit(1e-11));
    p.max(F::zero()).min(F::one())
}

fn check_range_args<F: Float>(q: F, k: usize, df: F) -> Result<(), StatsError> {
    if k < 2 {
        return Err(StatsError::Domain(format!("studentized range needs k >= 2, got {k}")));
    }
    if !(df > F::zero()) {
        return Err(StatsError::Domain("studentized range needs df > 0".into()));
    }
    if q.is_nan() {
        return Err(StatsError::Domain("q is NaN".into()));
    }
    Ok(())
}

/// P(Q > q) for the studentized range with `k` means and `df` error degrees
/// of freedom, by adaptive quadrature of
/// `∫₀^∞ f_s(s; df) · [1 − P(range_k ≤ q·s)] ds`, where `s = sqrt(χ²_df / df)`.
pub fn studentized_range_sf<F: Float + FromPrimitive>(q: F, k: usize, df: F) -> Result<F, StatsError> {
    check_range_args(q, k, df)?;
    if q <= F::zero() {
        return Ok(F::one());
    }
    if q.is_infinite() {
        return Ok(F::zero());
    }
    if df > lit(DF_INFINITE) {
        return Ok(F::one() - normal_range_cdf(q, k));
    }
    let half = lit::<F>(0.5);
    let nu = df;
    // log density of s = sqrt(chi2_nu / nu)
    let log_norm = nu * half * nu.ln() - ln_gamma(nu * half) - (nu * half - F::one()) * lit::<F>(2.0).ln();
    let density = move |s: F| {
        if s <= F::zero() {
            return F::zero();
        }
        (log_norm + (nu - F::one()) * s.ln() - nu * s * s * half).exp()
    };
    let spread = F::one() / nu.sqrt();
    let lo = (F::one() - lit::<F>(10.0) * spread).max(F::zero());
    let hi = F::one() + lit::<F>(12.0) * spread + lit::<F>(8.0) / nu;
    let mut breaks = vec![lo, hi];
    for c in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        let b = F::one() + lit::<F>(c) * spread;
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let tail = integrate_pieces(|s| density(s) * (F::one() - normal_range_cdf(q * s, k)), &breaks, lit(1e-7));
    Ok(tail.max(F::zero()).min(F::one()))
}

/// P(Q <= q); see [`studentized_range_sf`].
pub fn studentized_range_cdf<F: Float + FromPrimitive>(q: F, k: usize, df: F) -> Result<F, StatsError> {
    Ok(F::one() - studentized_range_sf(q, k, df)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn f_survival_df1_two_closed_form() {
        // with d1 = 2: P(F > f) = (1 + 2f/d2)^(−d2/2)
        for (f, d2) in [(3.0f64, 6.0f64), (0.7, 3.0), (12.0, 40.0)] {
            let closed = (1.0 + 2.0 * f / d2).powf(-d2 / 2.0);
            assert_abs_diff_eq!(f_survival(f, 2.0, d2).unwrap(), closed, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(f_survival(3.0f64, 2.0, 6.0).unwrap(), 0.125, epsilon = 1e-12);
        assert_eq!(f_survival(0.0f64, 2.0, 6.0).unwrap(), 1.0);
        assert_eq!(f_survival(f64::INFINITY, 2.0, 6.0).unwrap(), 0.0);
    }

    #[test]
    fn range_k2_is_scaled_abs_t() {
        // for two means Q = sqrt(2)|T| with T ~ t(df)
        for df in [3.0f64, 10.0, 47.0] {
            for q in [0.5f64, 1.5, 3.0, 4.5] {
                let t = q / 2f64.sqrt();
                let expect = incomplete_beta_regularized(df / (df + t * t), df / 2.0, 0.5).unwrap();
                assert_abs_diff_eq!(studentized_range_sf(q, 2, df).unwrap(), expect, epsilon = 2e-5);
            }
        }
    }

    #[test]
    fn range_infinite_df_k2() {
        // range of two standard normals is sqrt(2)|Z|
        for w in [0.5f64, 1.0, 2.77] {
            let expect = 2.0 * normal_cdf(w / 2f64.sqrt()) - 1.0;
            assert_abs_diff_eq!(normal_range_cdf(w, 2), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn tabulated_critical_values() {
        // 5% critical values of the studentized range: q(3, 10) = 3.877, q(5, 20) = 4.232
        assert_abs_diff_eq!(studentized_range_sf(3.877f64, 3, 10.0).unwrap(), 0.05, epsilon = 5e-4);
        assert_abs_diff_eq!(studentized_range_sf(4.232f64, 5, 20.0).unwrap(), 0.05, epsilon = 5e-4);
    }

    #[test]
    fn edge_cases() {
        assert_eq!(studentized_range_sf(0.0f64, 3, 6.0).unwrap(), 1.0);
        assert_eq!(studentized_range_sf(f64::INFINITY, 3, 6.0).unwrap(), 0.0);
        assert!(studentized_range_sf(1.0f64, 1, 6.0).is_err());
        assert!(studentized_range_sf(1.0f64, 3, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sf_monotone_in_q(q in 0.1f64..6.0, dq in 0.05f64..2.0, k in 2usize..8, df in 2u32..60) {
            let a = studentized_range_sf(q, k, df as f64).unwrap();
            let b = studentized_range_sf(q + dq, k, df as f64).unwrap();
            prop_assert!(b <= a + 1e-9);
        }
    }
}
