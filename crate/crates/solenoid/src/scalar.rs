//! Scalar traits shared by the matrix and cone code.
//!
//! Integer matrices (transition and window matrices) live over [`BigInt`];
//! ranks, weights and ratio bounds need a field, which is either exact
//! ([`BigRational`]) or floating point.

use std::any::Any;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Anything we are willing to put in a matrix.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Clone
        + Debug
        + PartialOrd
        + Num
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

/// Scalars where `/` is true division.
pub trait Field: Scalar {
    /// Whether zero tests are exact. Floating point fields answer `false`
    /// and callers that need exactness should convert first.
    const EXACT: bool;
}

impl Field for f32 {
    const EXACT: bool = false;
}

impl Field for f64 {
    const EXACT: bool = false;
}

impl Field for BigRational {
    const EXACT: bool = true;
}

/// Lift an integer into a field.
pub fn int_to_field<F: Field>(x: &BigInt) -> F {
    if let Some(v) = x.to_i64() {
        if let Some(f) = F::from_i64(v) {
            return f;
        }
    }
    // Too large for i64: go through f64 for float fields, which is the best
    // available, and through an exact ratio for rationals.
    let r = BigRational::from_integer(x.clone());
    ratio_to_field(&r)
}

/// Lift an exact ratio into a field.
pub fn ratio_to_field<F: Field>(x: &BigRational) -> F {
    let boxed: Box<dyn Any> = Box::new(x.clone());
    match boxed.downcast::<F>() {
        Ok(exact) => *exact,
        Err(_) => F::from_f64(x.to_f64().unwrap_or(f64::NAN)).expect("float conversion"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn huge_integers_round_trip_into_rationals() {
        let big: BigInt = BigInt::one() << 200u32;
        let big = big + BigInt::from(12345);
        let r: BigRational = int_to_field(&big);
        assert_eq!(r, BigRational::from_integer(big));
    }

    #[test]
    fn negative_ratio_is_exact() {
        let x = BigRational::new(BigInt::from(-7), BigInt::from(3));
        let y: BigRational = ratio_to_field(&x);
        assert_eq!(x, y);
        let f: f64 = ratio_to_field(&x);
        assert!((f + 7.0 / 3.0).abs() < 1e-15);
    }
}
