//! Scalar abstraction shared by every analytic model.
//!
//! All closed forms and chain solvers are written against [`Real`], so the
//! same code runs in `f64` (the default aliases at the crate root) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the models: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every `Real` can represent (a rounding of)
    /// any finite `f64`, so this never fails for finite input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in a float")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Binomial coefficient `C(n, k)` as a float.
pub fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * T::count(n - i) / T::count(i + 1);
    }
    acc
}

/// `x^n` for a non-negative integer exponent, with `0^0 = 1`.
pub fn powu<T: Real>(x: T, n: usize) -> T {
    let n = i32::try_from(n).expect("exponent fits in i32");
    x.powi(n)
}
