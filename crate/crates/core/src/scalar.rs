//! Scalar types for metric values.
//!
//! Distances, defects and ledger constants are generic over [`Scalar`]. Integer
//! valued metrics are exact in both `f64` and [`Exact`]; the rational type is
//! there for the places where halving (the four-point delta) or division (the
//! affine-control fit) must stay exact.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar.
pub type Exact = Ratio<i64>;

/// A metric value: ordered, closed under the field operations we need.
pub trait Scalar:
    Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Whether the type carries rounding error.
    const FLOATING: bool;

    fn half(self) -> Self;

    /// Equality for exact types; absolute tolerance `tol` for floating types.
    fn close_to(self, other: Self, tol: f64) -> bool;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn is_negative(self) -> bool {
        self < Self::zero()
    }

    /// Integral values serialize as JSON integers.
    fn to_json(self) -> serde_json::Value;

    fn from_json(value: &serde_json::Value) -> Option<Self>;
}

fn integral_json(x: f64) -> serde_json::Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        serde_json::Value::from(x as i64)
    } else {
        serde_json::Value::from(x)
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const FLOATING: bool = true;

            fn half(self) -> Self {
                self / 2.0
            }

            fn close_to(self, other: Self, tol: f64) -> bool {
                ((self - other).abs() as f64) <= tol
            }

            fn to_json(self) -> serde_json::Value {
                integral_json(self as f64)
            }

            fn from_json(value: &serde_json::Value) -> Option<Self> {
                value.as_f64().map(|x| x as $t)
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Exact {
    const FLOATING: bool = false;

    fn half(self) -> Self {
        self / Ratio::from_integer(2)
    }

    fn close_to(self, other: Self, _tol: f64) -> bool {
        self == other
    }

    /// Non-integers serialize as `"p/q"` strings.
    fn to_json(self) -> serde_json::Value {
        if self.is_integer() {
            serde_json::Value::from(self.to_integer())
        } else {
            serde_json::Value::from(self.to_string())
        }
    }

    fn from_json(value: &serde_json::Value) -> Option<Self> {
        if let Some(i) = value.as_i64() {
            return Some(Ratio::from_integer(i));
        }
        if let Some(s) = value.as_str() {
            return s.trim().parse().ok();
        }
        value.as_f64().and_then(Ratio::approximate_float)
    }
}

/// Largest element of a slice under `PartialOrd`; `None` when empty.
pub fn max_scalar<S: Scalar>(values: impl IntoIterator<Item = S>) -> Option<S> {
    values.into_iter().reduce(|a, b| a.max_of(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves_exactly() {
        assert_eq!(Exact::from_integer(3).half(), Ratio::new(3, 2));
        assert_eq!(7.0f64.half(), 3.5);
    }

    #[test]
    fn json_values() {
        assert_eq!(3.0f64.to_json(), serde_json::json!(3));
        assert_eq!(2.5f64.to_json(), serde_json::json!(2.5));
        assert_eq!(Exact::new(1, 3).to_json(), serde_json::json!("1/3"));
        assert_eq!(Exact::from_json(&serde_json::json!("1/3")), Some(Exact::new(1, 3)));
        assert_eq!(Exact::from_json(&serde_json::json!(0.5)), Some(Exact::new(1, 2)));
        assert_eq!(f64::from_json(&serde_json::json!(4)), Some(4.0));
    }

    #[test]
    fn tolerance_only_applies_to_floats() {
        assert!(1.0f64.close_to(1.0 + 1e-12, 1e-9));
        assert!(!Exact::new(1, 3).close_to(Exact::new(1, 3) + Exact::new(1, 1_000_000), 1.0));
    }
}
