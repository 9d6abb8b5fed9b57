use num_complex::Complex;
use rustfft::FftPlanner;

use crate::scalar::Real;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Forward DFT of `x` zero-padded (or truncated) to `len` points.
pub fn fft_padded<T: Real>(x: &[Complex<T>], len: usize) -> Vec<Complex<T>> {
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    let n = x.len().min(len);
    buf[..n].copy_from_slice(&x[..n]);
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf
}

/// Unnormalized inverse DFT of `x` zero-padded to `len` points.
pub fn ifft_padded<T: Real>(x: &[Complex<T>], len: usize) -> Vec<Complex<T>> {
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    let n = x.len().min(len);
    buf[..n].copy_from_slice(&x[..n]);
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    buf
}
