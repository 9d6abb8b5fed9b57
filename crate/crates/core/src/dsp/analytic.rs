use num_complex::Complex;
use rustfft::FftPlanner;

use crate::scalar::Real;

/// Analytic (one-sided spectrum) form of a real sequence.
///
/// DFT-domain quadrature: negative-frequency bins are zeroed and positive
/// bins doubled. The real part of the result reproduces the input exactly.
pub fn analytic_signal<T: Real>(x: &[T]) -> Vec<Complex<T>> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let two = T::lit(2.0);
    let half = n / 2;
    for (i, v) in buf.iter_mut().enumerate() {
        if i == 0 || (n.is_multiple_of(2) && i == half) {
            continue;
        }
        if i < n.div_ceil(2) {
            *v = *v * two;
        } else {
            *v = Complex::new(T::zero(), T::zero());
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = T::one() / T::from_usize_lossy(n);
    buf.iter().map(|v| *v * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn real_part_is_preserved_and_tone_becomes_exponential() {
        let n = 256;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 10.0 * i as f64 / n as f64).cos()).collect();
        let z = analytic_signal(&x);
        for (i, v) in z.iter().enumerate() {
            assert!((v.re - x[i]).abs() < 1e-12);
            let expect = (2.0 * PI * 10.0 * i as f64 / n as f64).sin();
            assert!((v.im - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_length_input() {
        let n = 255;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 7.0 * i as f64 / n as f64).cos()).collect();
        let z = analytic_signal(&x);
        assert!(z.iter().all(|v| (v.norm() - 1.0).abs() < 1e-10));
    }
}
