use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the analytic and statistical code is written over.
///
/// Implemented for `f32` and `f64`. Sampling always runs in `f64` and the
/// draws are rounded into `T`, so `f32` datasets are `f64` draws narrowed once.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + Default + 'static
{
    /// Converts an `f64` literal. Never fails for finite inputs on f32/f64.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }

    /// Tolerance used when checking that probability weights sum to one.
    #[inline]
    fn normalization_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(100.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
