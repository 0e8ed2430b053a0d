use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

use super::distributions::{f_survival, studentized_range_sf};
use super::{lit, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult<F> {
    pub f_value: F,
    pub p_value: F,
    pub df_between: usize,
    pub df_within: usize,
    pub group_count: usize,
    pub ms_between: F,
    pub ms_within: F,
    /// Within-group variance is zero: F is infinite (or 0 when the means
    /// also agree) and p is 0 (or 1).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyComparison<F> {
    pub a: String,
    pub b: String,
    /// mean(b) − mean(a)
    pub mean_difference: F,
    pub q_statistic: F,
    pub p_value: F,
    pub significant_at_95: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult<F> {
    pub comparisons: Vec<TukeyComparison<F>>,
}

struct Decomposition<F> {
    means: Vec<F>,
    sizes: Vec<usize>,
    ss_between: F,
    ss_within: F,
    total: usize,
}

fn decompose<F: Float + FromPrimitive>(groups: &[Vec<F>]) -> Result<Decomposition<F>, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(StatsError::EmptyGroup(i));
    }
    let total: usize = groups.iter().map(Vec::len).sum();
    if total <= groups.len() {
        return Err(StatsError::NoWithinDf { total, groups: groups.len() });
    }
    let sum = |g: &[F]| g.iter().fold(F::zero(), |a, &v| a + v);
    let means: Vec<F> = groups.iter().map(|g| sum(g) / lit(g.len() as f64)).collect();
    let grand = groups.iter().map(|g| sum(g)).fold(F::zero(), |a, v| a + v) / lit(total as f64);
    let mut ss_between = F::zero();
    let mut ss_within = F::zero();
    let mut ss_raw = F::zero();
    for (g, &m) in groups.iter().zip(&means) {
        ss_between = ss_between + lit::<F>(g.len() as f64) * (m - grand) * (m - grand);
        for &v in g {
            ss_within = ss_within + (v - m) * (v - m);
            ss_raw = ss_raw + v * v;
        }
    }
    // rounding residue from equal values must not turn into a spurious F
    let noise = F::epsilon() * lit(64.0) * ss_raw;
    if ss_between <= noise {
        ss_between = F::zero();
    }
    if ss_within <= noise {
        ss_within = F::zero();
    }
    Ok(Decomposition { means, sizes: groups.iter().map(Vec::len).collect(), ss_between, ss_within, total })
}

/// One-way ANOVA over `groups`.
pub fn anova_oneway<F: Float + FromPrimitive>(groups: &[Vec<F>]) -> Result<AnovaResult<F>, StatsError> {
    let d = decompose(groups)?;
    let df_between = groups.len() - 1;
    let df_within = d.total - groups.len();
    let ms_between = d.ss_between / lit(df_between as f64);
    let ms_within = d.ss_within / lit(df_within as f64);
    let (f_value, p_value, degenerate) = if ms_between == F::zero() {
        (F::zero(), F::one(), ms_within == F::zero())
    } else if ms_within == F::zero() {
        (F::infinity(), F::zero(), true)
    } else {
        let f = ms_between / ms_within;
        (f, f_survival(f, lit(df_between as f64), lit(df_within as f64))?, false)
    };
    Ok(AnovaResult { f_value, p_value, df_between, df_within, group_count: groups.len(), ms_between, ms_within, degenerate })
}

/// Tukey–Kramer pairwise comparisons for every unordered pair of groups.
pub fn tukey_hsd<F, S>(groups: &[Vec<F>], labels: &[S]) -> Result<TukeyResult<F>, StatsError>
where
    F: Float + FromPrimitive,
    S: AsRef<str>,
{
    if labels.len() != groups.len() {
        return Err(StatsError::LabelMismatch { labels: labels.len(), groups: groups.len() });
    }
    let d = decompose(groups)?;
    let k = groups.len();
    let df_within = d.total - k;
    let ms_within = d.ss_within / lit(df_within as f64);
    let half = lit::<F>(0.5);
    let mut comparisons = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let diff = d.means[j] - d.means[i];
            let scale = ms_within * half * (F::one() / lit(d.sizes[i] as f64) + F::one() / lit(d.sizes[j] as f64));
            let tiny_diff = diff.abs() <= F::epsilon() * lit(16.0) * (d.means[i].abs() + d.means[j].abs());
            let (q, p) = if tiny_diff {
                (F::zero(), F::one())
            } else if scale == F::zero() {
                (F::infinity(), F::zero())
            } else {
                let q = diff.abs() / scale.sqrt();
                (q, studentized_range_sf(q, k, lit(df_within as f64))?)
            };
            comparisons.push(TukeyComparison {
                a: labels[i].as_ref().to_string(),
                b: labels[j].as_ref().to_string(),
                mean_difference: diff,
                q_statistic: q,
                p_value: p,
                significant_at_95: p <= lit(0.05),
            });
        }
    }
    Ok(TukeyResult { comparisons })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fixture() -> Vec<Vec<f64>> {
        vec![vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]]
    }

    #[test]
    fn anova_fixture() {
        let r = anova_oneway(&fixture()).unwrap();
        assert_eq!(r.f_value, 3.0);
        assert_abs_diff_eq!(r.p_value, 0.125, epsilon = 1e-12);
        assert_eq!((r.df_between, r.df_within, r.group_count), (2, 6, 3));
        assert!(!r.degenerate);
    }

    #[test]
    fn identical_groups() {
        let g = vec![vec![0.2, 0.4, 0.9], vec![0.2, 0.4, 0.9]];
        let r = anova_oneway(&g).unwrap();
        assert_eq!((r.f_value, r.p_value), (0.0, 1.0));
        let t = tukey_hsd(&g, &["a", "b"]).unwrap();
        assert_eq!((t.comparisons[0].q_statistic, t.comparisons[0].p_value), (0.0, 1.0));
    }

    #[test]
    fn constant_everywhere() {
        let g = vec![vec![0.3; 3], vec![0.3; 2], vec![0.3; 4]];
        let r = anova_oneway(&g).unwrap();
        assert_eq!((r.f_value, r.p_value), (0.0, 1.0));
        assert!(r.degenerate);
    }

    #[test]
    fn separated_without_spread() {
        let g = vec![vec![0.0; 3], vec![1.0; 3]];
        let r = anova_oneway(&g).unwrap();
        assert!(r.f_value.is_infinite() && r.degenerate);
        assert_eq!(r.p_value, 0.0);
        let t = tukey_hsd(&g, &["a", "b"]).unwrap();
        assert!(t.comparisons[0].significant_at_95);
    }

    #[test]
    fn far_apart_means() {
        let g = vec![vec![1.0, 1.2, 0.9, 1.1], vec![5.0, 5.3, 4.8, 5.1], vec![9.0, 9.2, 8.9, 9.1]];
        let r = anova_oneway(&g).unwrap();
        assert!(r.p_value < 0.001);
        // recompute the tail through the beta function directly
        let x = r.df_within as f64 / (r.df_within as f64 + r.df_between as f64 * r.f_value);
        let oracle = super::super::incomplete_beta_regularized(x, r.df_within as f64 / 2.0, r.df_between as f64 / 2.0).unwrap();
        assert_abs_diff_eq!(r.p_value, oracle, epsilon = 1e-15);
    }

    #[test]
    fn tukey_fixture() {
        let t = tukey_hsd(&fixture(), &["x", "y", "z"]).unwrap();
        assert_eq!(t.comparisons.len(), 3);
        let extreme = t.comparisons.iter().find(|c| c.a == "x" && c.b == "z").unwrap();
        assert_eq!(extreme.mean_difference, 2.0);
        assert_abs_diff_eq!(extreme.q_statistic, 2.0 / (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(extreme.q_statistic, 3.4641, epsilon = 1e-4);
        assert!(extreme.p_value > 0.05 && extreme.p_value < 0.2);
        assert_eq!(extreme.significant_at_95, extreme.p_value <= 0.05);
    }

    #[test]
    fn unequal_sizes_use_kramer_error() {
        let g = vec![vec![1.0, 2.0], vec![2.0, 3.0, 4.0, 5.0]];
        let t = tukey_hsd(&g, &["a", "b"]).unwrap();
        // MSW = (0.5 + 5) / 4, se = sqrt(MSW/2 · (1/2 + 1/4))
        let msw = 5.5 / 4.0;
        let q = 2.0 / (msw / 2.0 * 0.75f64).sqrt();
        assert_abs_diff_eq!(t.comparisons[0].q_statistic, q, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(anova_oneway(&[vec![1.0f64]]), Err(StatsError::TooFewGroups(1)));
        assert_eq!(anova_oneway(&[vec![1.0f64], vec![]]), Err(StatsError::EmptyGroup(1)));
        assert_eq!(anova_oneway(&[vec![1.0f64], vec![2.0]]), Err(StatsError::NoWithinDf { total: 2, groups: 2 }));
        assert!(matches!(tukey_hsd(&fixture(), &["a"]), Err(StatsError::LabelMismatch { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn f_invariances(groups in proptest::collection::vec(proptest::collection::vec(-10f64..10.0, 2..6), 2..5),
                         shift in -100f64..100.0, scale in prop_oneof![-5f64..-0.2, 0.2f64..5.0]) {
            let base = anova_oneway(&groups).unwrap();
            prop_assume!(!base.degenerate);
            let moved: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v * scale + shift).collect()).collect();
            let r = anova_oneway(&moved).unwrap();
            prop_assert!((r.f_value - base.f_value).abs() <= 1e-6 * base.f_value.max(1.0));
            let mut perm: Vec<Vec<f64>> = groups.iter().rev().map(|g| g.iter().rev().copied().collect()).collect();
            perm.rotate_left(1);
            let r = anova_oneway(&perm).unwrap();
            prop_assert!((r.f_value - base.f_value).abs() <= 1e-9 * base.f_value.max(1.0));
        }
    }
}
