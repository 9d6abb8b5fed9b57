//! Scalar abstraction for the signal-level layers.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point sample type: `f32` or `f64`.
///
/// Waveform synthesis, harmonic modeling, scene geometry and de-chirp
/// synthesis are written against this trait. The estimation layers
/// (subband filter bank, fusion, imaging) run in `f64` only: picosecond
/// delay estimation across a 22.8 GHz span leaves no headroom for single
/// precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + rustfft::FftNum + Default + Display + Debug + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub(crate) fn c<T: Real>() -> T {
    T::lit(SPEED_OF_LIGHT)
}
