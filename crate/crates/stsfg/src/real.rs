//! Scalar abstraction for the numeric core.
//!
//! All field math is generic over [`Real`], which bundles the float and FFT
//! bounds the solver needs. `f64` is the working precision everywhere in the
//! shipped binary; `f32` remains available for quick experiments.

use num_traits::{Float, FloatConst, NumAssignOps};
use rustfft::FftNum;
use std::fmt::{Debug, Display};
use std::iter::Sum;

pub trait Real:
    Float + FloatConst + FftNum + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("finite f64 literal")
    }

    fn as_f64(self) -> f64 {
        num_traits::NumCast::from(self).expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}
