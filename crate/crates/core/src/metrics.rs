//! Unalikeability coefficient (UC), its maximum for a given trial count and
//! category count, and the adjusted coefficient UCA = UC / UC_max.
//!
//! UC counts ordered pairs of unlike observations:
//! `UC = (n² − Σ c²) / (n² − n)`. Both terms are exact integers; the chosen
//! [`Scalar`] only represents the final quotient.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::PronounCategory;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("undefined variation: need at least 2 observations, got {0}")]
    TooFewObservations(u64),
    #[error("infeasible partition: {k} categories cannot be filled by {n} observations")]
    InfeasiblePartition { n: u64, k: usize },
    #[error("category count must be at least {min}, got {k}")]
    CategoryCount { k: usize, min: usize },
    #[error("counts sum to {sum} but tally declares n = {n}")]
    CountMismatch { sum: u64, n: u64 },
}

/// Per-sentence pronoun counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PronounTally {
    pub sentence_id: u32,
    counts: BTreeMap<PronounCategory, u64>,
    n: u64,
}

impl PronounTally {
    pub fn new(sentence_id: u32) -> Self {
        PronounTally { sentence_id, counts: BTreeMap::new(), n: 0 }
    }

    pub fn from_observations<'a, I>(sentence_id: u32, observations: I) -> Self
    where
        I: IntoIterator<Item = &'a PronounCategory>,
    {
        let mut tally = PronounTally::new(sentence_id);
        for obs in observations {
            tally.add(obs.clone(), 1);
        }
        tally
    }

    pub fn from_counts<I>(sentence_id: u32, counts: I) -> Self
    where
        I: IntoIterator<Item = (PronounCategory, u64)>,
    {
        let mut tally = PronounTally::new(sentence_id);
        for (cat, c) in counts {
            tally.add(cat, c);
        }
        tally
    }

    pub fn add(&mut self, category: PronounCategory, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(category).or_insert(0) += count;
        self.n += count;
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn count(&self, category: &PronounCategory) -> u64 {
        self.counts.get(category).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<PronounCategory, u64> {
        &self.counts
    }

    /// Number of categories with a nonzero count.
    pub fn observed_categories(&self) -> usize {
        self.counts.len()
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let sum: u64 = self.counts.values().sum();
        if sum != self.n {
            return Err(MetricsError::CountMismatch { sum, n: self.n });
        }
        if self.n < 2 {
            return Err(MetricsError::TooFewObservations(self.n));
        }
        Ok(())
    }
}

/// UC, UC_max and UCA for one sentence, with the normalisation inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationScore<T> {
    pub uc: T,
    pub uc_max: T,
    pub uca: T,
    pub n: u64,
    pub k: usize,
    /// Distinct categories actually observed; above `k`, `uca` may exceed 1.
    pub observed_categories: usize,
}

/// Unlike ordered pairs over all ordered pairs, as exact integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairFraction {
    pub unlike: u128,
    pub total: u128,
}

/// Exact pair counts for a multiset of category counts.
pub fn pair_fraction(counts: &[u64]) -> Result<PairFraction, MetricsError> {
    let n: u128 = counts.iter().map(|&c| c as u128).sum();
    if n < 2 {
        return Err(MetricsError::TooFewObservations(n as u64));
    }
    let sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    Ok(PairFraction { unlike: n * n - sq, total: n * n - n })
}

/// Counts of the most even split of `n` observations into `k` categories.
pub fn most_even_partition(n: u64, k: usize) -> Result<Vec<u64>, MetricsError> {
    if k == 0 {
        return Err(MetricsError::CategoryCount { k, min: 1 });
    }
    if k as u64 > n {
        return Err(MetricsError::InfeasiblePartition { n, k });
    }
    let base = n / k as u64;
    let extra = (n % k as u64) as usize;
    Ok((0..k).map(|i| if i < extra { base + 1 } else { base }).collect())
}

/// Unalikeability coefficient of a tally.
pub fn uc<T: Scalar>(tally: &PronounTally) -> Result<T, MetricsError> {
    tally.validate()?;
    let counts: Vec<u64> = tally.counts.values().copied().collect();
    uc_of_counts(&counts)
}

pub fn uc_of_counts<T: Scalar>(counts: &[u64]) -> Result<T, MetricsError> {
    let f = pair_fraction(counts)?;
    Ok(T::from_ratio(f.unlike, f.total))
}

/// Largest UC reachable with `n` observations over `k` categories.
pub fn uc_max<T: Scalar>(n: u64, k: usize) -> Result<T, MetricsError> {
    if n < 2 {
        return Err(MetricsError::TooFewObservations(n));
    }
    let f = pair_fraction(&most_even_partition(n, k)?)?;
    Ok(T::from_ratio(f.unlike, f.total))
}

/// Adjusted unalikeability: UC normalised by UC_max(n, k).
pub fn uca<T: Scalar>(tally: &PronounTally, k: usize) -> Result<VariationScore<T>, MetricsError> {
    if k < 2 {
        return Err(MetricsError::CategoryCount { k, min: 2 });
    }
    tally.validate()?;
    let counts: Vec<u64> = tally.counts.values().copied().collect();
    let observed = pair_fraction(&counts)?;
    let max = pair_fraction(&most_even_partition(tally.n, k)?)?;
    // both fractions share the denominator n² − n, so UCA is unlike/max_unlike
    debug_assert_eq!(observed.total, max.total);
    if tally.observed_categories() > k {
        log::warn!(
            "sentence {}: {} categories observed but k = {}; UCA may exceed 1",
            tally.sentence_id,
            tally.observed_categories(),
            k
        );
    }
    Ok(VariationScore {
        uc: T::from_ratio(observed.unlike, observed.total),
        uc_max: T::from_ratio(max.unlike, max.total),
        uca: T::from_ratio(observed.unlike, max.unlike),
        n: tally.n,
        k,
        observed_categories: tally.observed_categories(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Direct evaluation of the ordered-pair definition.
    fn brute_force(counts: &[u64]) -> (u128, u128) {
        let obs: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(cat, &c)| std::iter::repeat_n(cat, c as usize))
            .collect();
        let n = obs.len() as u128;
        let mut unlike = 0u128;
        for (i, a) in obs.iter().enumerate() {
            for (j, b) in obs.iter().enumerate() {
                if i != j && a != b {
                    unlike += 1;
                }
            }
        }
        (unlike, n * n - n)
    }

    fn tally(counts: &[(PronounCategory, u64)]) -> PronounTally {
        PronounTally::from_counts(1, counts.iter().cloned())
    }

    #[test]
    fn uc_examples() {
        let all_he = tally(&[(PronounCategory::He, 100)]);
        assert_eq!(uc::<f64>(&all_he).unwrap(), 0.0);

        let half = tally(&[(PronounCategory::He, 50), (PronounCategory::She, 50)]);
        assert_eq!(brute_force(&[50, 50]), (5000, 9900));
        assert_eq!(uc::<Exact>(&half).unwrap(), Exact::new(5000, 9900));
        assert_abs_diff_eq!(uc::<f64>(&half).unwrap(), 0.505_050_505, epsilon = 1e-9);

        let spread = [15, 15, 14, 14, 14, 14, 14];
        assert_eq!(brute_force(&spread), (8570, 9900));
        assert_abs_diff_eq!(uc_of_counts::<f64>(&spread).unwrap(), 0.865_657, epsilon = 5e-7);
    }

    #[test]
    fn uc_needs_two() {
        let one = tally(&[(PronounCategory::He, 1)]);
        assert_eq!(uc::<f64>(&one), Err(MetricsError::TooFewObservations(1)));
    }

    #[test]
    fn uc_max_examples() {
        let m: f64 = uc_max(100, 7).unwrap();
        assert_abs_diff_eq!(m, 0.865_657, epsilon = 5e-7);
        assert_eq!(format!("{m:.3}"), "0.866");
        assert_eq!(uc_max::<f64>(100, 1).unwrap(), 0.0);
        assert_eq!(brute_force(&[2, 2, 2]), (24, 30));
        assert_eq!(uc_max::<Exact>(6, 3).unwrap(), Exact::new(4, 5));
        assert_eq!(uc_max::<f64>(3, 4), Err(MetricsError::InfeasiblePartition { n: 3, k: 4 }));
    }

    #[test]
    fn uca_examples() {
        let all_he = tally(&[(PronounCategory::He, 100)]);
        assert_eq!(uca::<f64>(&all_he, 7).unwrap().uca, 0.0);

        let even = PronounTally::from_counts(
            2,
            PronounCategory::FIXED.iter().take(7).cloned().zip(most_even_partition(100, 7).unwrap()),
        );
        assert_eq!(uca::<Exact>(&even, 7).unwrap().uca, Exact::from_integer(1));

        let t = tally(&[(PronounCategory::He, 93), (PronounCategory::HeSlashShe, 7)]);
        assert_eq!(brute_force(&[93, 7]), (1302, 9900));
        let s = uca::<f64>(&t, 7).unwrap();
        assert_abs_diff_eq!(s.uc, 1302.0 / 9900.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.uc, 0.13152, epsilon = 5e-6);
        assert_abs_diff_eq!(s.uca, 0.15193, epsilon = 5e-6);
        assert_eq!((s.n, s.k, s.observed_categories), (100, 7, 2));
        assert_eq!(uca::<Exact>(&t, 7).unwrap().uca, Exact::new(1302, 8570));
    }

    #[test]
    fn uca_rejects_small_k() {
        let t = tally(&[(PronounCategory::He, 3), (PronounCategory::She, 1)]);
        assert_eq!(uca::<f64>(&t, 1), Err(MetricsError::CategoryCount { k: 1, min: 2 }));
    }

    #[test]
    fn uca_can_exceed_one_beyond_k() {
        let counts: Vec<(PronounCategory, u64)> = PronounCategory::FIXED.iter().cloned().map(|c| (c, 10)).collect();
        let t = tally(&counts);
        let s = uca::<f64>(&t, 7).unwrap();
        assert!(s.uca > 1.0);
        assert_eq!(s.observed_categories, 10);
    }

    #[test]
    fn f32_and_i64_ratio_agree() {
        let t = tally(&[(PronounCategory::He, 60), (PronounCategory::She, 25), (PronounCategory::You, 15)]);
        let a = uca::<f32>(&t, 7).unwrap().uca;
        let b = uca::<num_rational::Ratio<i64>>(&t, 7).unwrap().uca;
        assert!((a as f64 - b.to_f64_lossy()).abs() < 1e-6);
    }

    fn counts_strategy() -> impl Strategy<Value = Vec<u64>> {
        proptest::collection::vec(0u64..60, 1..10).prop_filter("n >= 2", |c| c.iter().sum::<u64>() >= 2)
    }

    proptest! {
        #[test]
        fn closed_form_matches_pairs(counts in counts_strategy()) {
            let f = pair_fraction(&counts).unwrap();
            prop_assert_eq!((f.unlike, f.total), brute_force(&counts));
        }

        #[test]
        fn permutation_invariant(mut counts in counts_strategy(), seed in any::<u64>()) {
            let before: Exact = uc_of_counts(&counts).unwrap();
            let len = counts.len();
            counts.rotate_left((seed as usize) % len);
            counts.reverse();
            prop_assert_eq!(uc_of_counts::<Exact>(&counts).unwrap(), before);
        }

        #[test]
        fn merging_never_increases(counts in proptest::collection::vec(1u64..50, 2..8)) {
            let before: Exact = uc_of_counts(&counts).unwrap();
            let mut merged = counts[2..].to_vec();
            merged.push(counts[0] + counts[1]);
            prop_assert!(uc_of_counts::<Exact>(&merged).unwrap() <= before);
        }

        #[test]
        fn bounded_by_max(counts in proptest::collection::vec(1u64..40, 1..8), extra in 0usize..4) {
            let n: u64 = counts.iter().sum();
            prop_assume!(n >= 2);
            let k = (counts.len() + extra).max(2);
            prop_assume!(k as u64 <= n);
            let t = PronounTally::from_counts(
                1,
                counts.iter().enumerate().map(|(i, &c)| (PronounCategory::Other(format!("c{i}")), c)),
            );
            let s = uca::<Exact>(&t, k).unwrap();
            prop_assert!(s.uc <= s.uc_max);
            prop_assert!(s.uca >= Exact::from_integer(0) && s.uca <= Exact::from_integer(1));
        }

        #[test]
        fn uc_max_nondecreasing_in_k(n in 2u64..120, k in 1usize..20) {
            prop_assume!((k as u64) < n);
            let a: Exact = uc_max(n, k).unwrap();
            let b: Exact = uc_max(n, k + 1).unwrap();
            prop_assert!(a <= b);
        }
    }
}
