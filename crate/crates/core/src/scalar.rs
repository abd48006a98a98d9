//! Numeric abstraction for probability tables.
//!
//! Every belief operation is written against [`Scalar`] so the same code runs
//! on `f64` (the simulator's representation) and on exact rationals such as
//! `num_rational::BigRational`, which the test suite uses to confirm that
//! ties are produced exactly where the floating-point path claims them.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A real-valued field element usable as a probability.
///
/// `Clone` rather than `Copy` so arbitrary-precision rationals qualify.
pub trait Scalar:
    Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy conversion used only for tolerance checks and random draws.
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// `base^exp` by repeated squaring; works for any [`Scalar`].
pub fn powu<T: Scalar>(base: &T, exp: usize) -> T {
    num_traits::pow(base.clone(), exp)
}

/// Binomial coefficients `choose(n, 0..=n)` in the scalar type.
///
/// Uses the multiplicative recurrence, which is exact for rationals and
/// accurate to a few ulps in floating point.
pub fn binomial_row<T: Scalar>(n: usize) -> Vec<T> {
    let mut row = Vec::with_capacity(n + 1);
    let mut coef = T::one();
    row.push(coef.clone());
    for c in 0..n {
        coef = coef * T::from_count(n - c) / T::from_count(c + 1);
        row.push(coef.clone());
    }
    row
}
