use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type shared by the tensor engine, the model and
/// the statistics routines.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::c(n as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
