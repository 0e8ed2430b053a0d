use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

/// Scalar types the unalikeability metrics can be evaluated in.
///
/// Metric numerators and denominators are exact integers; a scalar only has to
/// represent their quotient. Floating types round once, rationals stay exact.
pub trait Scalar: Num + Clone + PartialOrd + Debug + ToPrimitive {
    fn from_ratio(numerator: u128, denominator: u128) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn from_ratio(numerator: u128, denominator: u128) -> Self {
        numerator as f64 / denominator as f64
    }
}

impl Scalar for f32 {
    fn from_ratio(numerator: u128, denominator: u128) -> Self {
        (numerator as f64 / denominator as f64) as f32
    }
}

impl Scalar for Ratio<i128> {
    fn from_ratio(numerator: u128, denominator: u128) -> Self {
        let n = i128::try_from(numerator).expect("numerator exceeds i128");
        let d = i128::try_from(denominator).expect("denominator exceeds i128");
        Ratio::new(n, d)
    }
}

impl Scalar for Ratio<i64> {
    fn from_ratio(numerator: u128, denominator: u128) -> Self {
        // reduce in the wide type first so moderately large inputs still fit
        let r = Ratio::new(numerator, denominator);
        let n = i64::try_from(*r.numer()).expect("numerator exceeds i64");
        let d = i64::try_from(*r.denom()).expect("denominator exceeds i64");
        Ratio::new(n, d)
    }
}
