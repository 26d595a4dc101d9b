//! The scalar abstraction every numeric routine in the crate is generic over.
//!
//! `num_traits::Float` would be the natural bound, but the 256-bit binary
//! float from the `f256` crate does not implement it, and that type is what
//! keeps long SR1 sequences on ill-conditioned quadratics exact enough to
//! show finite termination. [`Scalar`] therefore asks for the arithmetic
//! `num_traits` provides plus the handful of elementary functions the
//! algorithms need.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_traits::NumAssign;

pub use f256::f256;

/// A real field element with the elementary functions used by the solvers.
pub trait Scalar: Copy + Debug + Display + PartialOrd + NumAssign + Neg<Output = Self> + Send + Sync + 'static {
    /// Machine epsilon of the format.
    fn epsilon() -> Self;
    /// Nearest representable value to `x`.
    fn from_f64(x: f64) -> Self;
    /// Nearest `f64` to `self`.
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn exp(self) -> Self;
    /// `eˣ − 1`, accurate near zero.
    fn exp_m1(self) -> Self;
    fn is_finite(self) -> bool;

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }
}

macro_rules! impl_native {
    ($t:ty) => {
        impl Scalar for $t {
            fn epsilon() -> Self {
                <$t>::EPSILON
            }
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            fn ln_1p(self) -> Self {
                <$t>::ln_1p(self)
            }
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            fn exp_m1(self) -> Self {
                <$t>::exp_m1(self)
            }
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

impl_native!(f32);
impl_native!(f64);

// Bit layout of binary256: 1 sign bit, 19 exponent bits, 236 fraction
// bits, of which the top 108 live in the high word.
const F256_HI_FRACTION_BITS: u32 = 108;
const F256_EXP_MASK: u128 = (1 << 19) - 1;
const F256_EXP_BIAS: i64 = (1 << 18) - 1;

fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

impl Scalar for f256 {
    fn epsilon() -> Self {
        f256::EPSILON
    }
    fn from_f64(x: f64) -> Self {
        f256::from(x)
    }
    fn to_f64(self) -> f64 {
        let (hi, _) = self.to_bits();
        let negative = hi >> 127 == 1;
        let biased = ((hi >> F256_HI_FRACTION_BITS) & F256_EXP_MASK) as i64;
        let magnitude = if biased == 0 {
            0.0
        } else if biased == F256_EXP_MASK as i64 {
            if self.is_nan() {
                f64::NAN
            } else {
                f64::INFINITY
            }
        } else {
            // Rounding the 109-bit significand to f64 happens once, here;
            // the power-of-two scalings below are exact outside the
            // subnormal range.
            let significand = ((hi & ((1u128 << F256_HI_FRACTION_BITS) - 1)) | (1u128 << F256_HI_FRACTION_BITS)) as f64;
            let exp = biased - F256_EXP_BIAS - F256_HI_FRACTION_BITS as i64;
            if exp > 1023 + 1023 {
                f64::INFINITY
            } else if exp < -1074 - 1022 - 110 {
                0.0
            } else {
                let first = exp.clamp(-1022, 1023);
                let second = (exp - first).clamp(-1022, 1023);
                significand * pow2(first) * pow2(second)
            }
        };
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
    fn sqrt(self) -> Self {
        f256::sqrt(self)
    }
    fn abs(self) -> Self {
        f256::abs(&self)
    }
    fn ln(self) -> Self {
        f256::ln(&self)
    }
    fn ln_1p(self) -> Self {
        f256::ln_1p(&self)
    }
    fn exp(self) -> Self {
        f256::exp(&self)
    }
    fn exp_m1(self) -> Self {
        f256::exp_m1(&self)
    }
    fn is_finite(self) -> bool {
        f256::is_finite(self)
    }
}

/// Converts between scalar types through `f64`.
pub fn cast<S: Scalar, T: Scalar>(x: S) -> T {
    T::from_f64(x.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f256_round_trips_doubles() {
        for &x in &[0.0, 1.0, -1.0, 0.1, 3.5e-300, -7.25e300, 1.0 / 3.0, f64::MIN_POSITIVE] {
            assert_eq!(f256::from_f64(x).to_f64(), x, "{x}");
        }
    }

    #[test]
    fn f256_rounds_to_nearest_double() {
        let third = f256::ONE / f256::from_f64(3.0);
        assert_eq!(third.to_f64(), 1.0 / 3.0);
        let tiny = f256::from_f64(1e-300) * f256::from_f64(1e-300);
        assert_eq!(tiny.to_f64(), 0.0);
        let huge = f256::from_f64(1e300) * f256::from_f64(1e300);
        assert_eq!(huge.to_f64(), f64::INFINITY);
        assert!((-huge).to_f64().is_infinite());
    }

    #[test]
    fn f256_elementary_functions_match_f64() {
        let x = 2.75_f64;
        let y = f256::from_f64(x);
        assert!((Scalar::sqrt(y).to_f64() - x.sqrt()).abs() <= 1e-15);
        assert!((Scalar::ln(y).to_f64() - x.ln()).abs() <= 1e-15);
        assert!((Scalar::exp(y).to_f64() - x.exp()).abs() <= 1e-13);
        assert!(<f256 as Scalar>::epsilon() < f256::from_f64(1e-70));
    }

    #[test]
    fn min_max_follow_ordering() {
        assert_eq!(Scalar::max(1.0_f64, 2.0), 2.0);
        assert_eq!(Scalar::min(1.0_f32, 2.0), 1.0);
        assert_eq!(<f64 as Scalar>::half(), 0.5);
    }
}
