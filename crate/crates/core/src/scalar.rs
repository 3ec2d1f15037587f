use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used throughout the numeric core: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic sigmoid, split by sign so large magnitudes do not overflow `exp`.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn leaky_relu<T: Scalar>(x: T, negative_slope: T) -> T {
    x.max(T::zero()) + negative_slope * x.min(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0_f64), 0.5);
        assert!((sigmoid(10.0_f64) - 0.999_954_602_131_297_6).abs() < 1e-15);
        assert!((sigmoid(-10.0_f64) - 4.539_786_870_243_439_5e-5).abs() < 1e-18);
        assert!((sigmoid(0.0_f32) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn leaky_relu_branches() {
        assert!((leaky_relu(-0.2_f64, 0.1) + 0.02).abs() < 1e-15);
        assert_eq!(leaky_relu(0.3_f64, 0.1), 0.3);
        assert_eq!(leaky_relu(0.0_f64, 0.1), 0.0);
    }
}
