//! Scalar abstraction shared by the numeric modules.

use std::fmt::Debug;

use num_traits::{Float, FloatConst};

/// Floating point type the trust metric, reputation and regression code run on.
pub trait Scalar: Float + FloatConst + Debug + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    fn of(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("f64 literal representable")
    }

    /// Lossless widening used for quantiles, encoding and reporting.
    fn widen(self) -> f64 {
        self.to_f64().expect("scalar widens to f64")
    }

    /// Rounds to the nearest integer, ties to even.
    fn round_half_even(self) -> Self {
        let r = self.round();
        if (self - self.trunc()).abs() == Self::of(0.5) {
            let two = Self::of(2.0);
            two * (self / two).round()
        } else {
            r
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Rounds `x` to two significant digits (ties to even); used only for display.
pub fn two_significant<T: Scalar>(x: T) -> T {
    if x == T::zero() || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor();
    let scale = T::of(10.0).powf(T::one() - magnitude);
    (x * scale).round_half_even() / scale
}
