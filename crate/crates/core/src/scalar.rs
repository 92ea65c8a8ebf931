//! Numeric layer shared by the metric modules.
//!
//! Every ratio the crate produces (coverage, accuracy, chain class shares,
//! Scott's pi, Dice) is computed from integer counts. The computations are
//! generic over [`Scalar`] so callers can pick `f64`, `f32`, or an exact
//! rational such as `Ratio<i64>` when a value must be compared exactly.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Field-like scalar that can be built from counts.
pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {
    /// Lifts a count into the scalar type.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count not representable in scalar type")
    }

    /// `num / den`, or `None` when `den == 0`.
    fn ratio(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            None
        } else {
            Some(Self::from_count(num) / Self::from_count(den))
        }
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {}

/// Exact rational scalar.
pub type Exact = Ratio<i64>;

/// Percentage of `num / den`, rounded half-up to one decimal place.
///
/// Computed in integer arithmetic so that the rendered value never depends
/// on floating-point representation (66.65 must become 66.7, not 66.6).
pub fn percent_one_decimal(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        return None;
    }
    let num = num as u128;
    let den = den as u128;
    // round(1000 * num / den), half-up
    let tenths = (2000 * num + den) / (2 * den);
    Some(tenths as f64 / 10.0)
}
