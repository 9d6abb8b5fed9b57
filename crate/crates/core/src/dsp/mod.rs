//! Shared spectral-analysis helpers.

mod analytic;
mod bessel;
mod fft;
mod window;

pub use analytic::analytic_signal;
pub use bessel::bessel_j;
pub use fft::{fft_padded, ifft_padded, next_pow2};
pub use window::Window;
