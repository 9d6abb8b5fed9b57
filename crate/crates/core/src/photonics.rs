//! MZM nonlinearity and square-law detection: one IF chirp in, a set of
//! phase-locked harmonic chirps out.
//!
//! The modulator/photodiode chain is modeled at intensity level,
//! `I(t) = 1 + cos(theta + m * s(t))`. For a drive `s = cos(phi)` the
//! Jacobi-Anger expansion gives `I = sum_l c_l cos(l * phi)` with
//!
//! ```text
//! c_0      = 1 + cos(theta) J_0(m)
//! c_2n     = 2 cos(theta) (-1)^n J_2n(m)        n >= 1
//! c_(2n+1) = -2 sin(theta) (-1)^n J_(2n+1)(m)
//! ```
//!
//! Downstream code works with magnitudes `|c_l|`; the sign is kept so the
//! subband phases stay consistent.

use serde::{Deserialize, Serialize};

use crate::dsp::bessel_j;
use crate::error::{bail, Result};
use crate::scalar::Real;
use crate::waveform::{LfmParams, SampledSignal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MzmParams<T> {
    /// Modulation index `m`, rad.
    pub modulation_index: T,
    /// Bias angle `theta`, rad, in `[0, 2*pi)`.
    pub bias_angle: T,
    /// Optical carrier, Hz. Informational only.
    pub carrier_freq: T,
    /// Receive phase-modulator index, rad per unit echo amplitude.
    pub pm_index: T,
}

impl<T: Real> MzmParams<T> {
    pub fn new(modulation_index: T, bias_angle: T, carrier_freq: T, pm_index: T) -> Result<Self> {
        let p = Self { modulation_index, bias_angle, carrier_freq, pm_index };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.modulation_index, self.bias_angle, self.carrier_freq, self.pm_index];
        if vals.iter().any(|v| !v.is_finite()) {
            bail!(Photonics, "non-finite modulator parameter");
        }
        if self.modulation_index < T::zero() {
            bail!(Photonics, "modulation index must be >= 0");
        }
        if self.bias_angle < T::zero() || self.bias_angle >= T::TAU() {
            bail!(Photonics, "bias angle {} rad outside [0, 2*pi)", self.bias_angle);
        }
        Ok(())
    }
}

/// Default dynamic-range floor for flagging negligible harmonics, dB.
pub const DEFAULT_FLOOR_DB: f64 = 60.0;

/// Photocurrent harmonic coefficients `c_0 ..= c_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpectrum<T> {
    /// Signed coefficients, index = harmonic order.
    pub coefficients: Vec<T>,
    pub l_max: usize,
    /// Harmonics more than this many dB below the strongest AC harmonic
    /// are flagged negligible.
    pub floor_db: T,
}

impl<T: Real> HarmonicSpectrum<T> {
    /// `B_l = |c_l|`.
    pub fn magnitude(&self, l: usize) -> T {
        num_traits::Float::abs(self.coefficients[l])
    }

    /// Sign of `c_l` as +1 / -1 (the 0 / pi phase offset of harmonic `l`).
    pub fn sign(&self, l: usize) -> T {
        if self.coefficients[l] < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }

    fn strongest_ac(&self) -> T {
        (1..=self.l_max).map(|l| self.magnitude(l)).fold(T::zero(), T::max)
    }

    pub fn is_negligible(&self, l: usize) -> bool {
        let peak = self.strongest_ac();
        if peak == T::zero() {
            return true;
        }
        let floor = peak * T::lit(10.0).powf(-self.floor_db / T::lit(20.0));
        self.magnitude(l) < floor
    }

    pub fn negligible(&self) -> Vec<bool> {
        (0..=self.l_max).map(|l| l > 0 && self.is_negligible(l)).collect()
    }

    /// Complex gain of de-chirp channel `l`. The reference arm and the
    /// transmitted echo carry the same harmonic set, so the beat of
    /// harmonic `l` against itself scales with `pm_index * c_l * c_l`.
    pub fn dechirp_gain(&self, l: usize, pm_index: T) -> T {
        pm_index * self.coefficients[l] * self.coefficients[l]
    }
}

/// Jacobi-Anger coefficients of the intensity-model photocurrent.
pub fn harmonic_amplitudes<T: Real>(mzm: &MzmParams<T>, l_max: usize) -> Result<HarmonicSpectrum<T>> {
    if l_max < 1 {
        bail!(Photonics, "l_max must be >= 1");
    }
    mzm.validate()?;
    let m = mzm.modulation_index;
    let (s, c) = mzm.bias_angle.sin_cos();
    let two = T::lit(2.0);
    let coefficients = (0..=l_max)
        .map(|l| {
            let j = bessel_j(l, m);
            let n = l / 2;
            let alt = if n % 2 == 0 { T::one() } else { -T::one() };
            match l {
                0 => T::one() + c * j,
                _ if l % 2 == 0 => two * c * alt * j,
                _ => -two * s * alt * j,
            }
        })
        .collect();
    Ok(HarmonicSpectrum { coefficients, l_max, floor_db: T::lit(DEFAULT_FLOOR_DB) })
}

/// Exact memoryless transfer `1 + cos(theta + m * drive)`.
pub fn mzm_pd_oracle<T: Real>(drive: &SampledSignal<T>, mzm: &MzmParams<T>) -> Result<SampledSignal<T>> {
    mzm.validate()?;
    let out = drive.samples.iter().map(|&v| T::one() + (mzm.bias_angle + mzm.modulation_index * v).cos()).collect();
    SampledSignal::new(out, drive.sample_rate, drive.start_time)
}

/// Returns `false` (and logs a warning) when harmonic `l_max` of a drive
/// reaching `f_max` lands above Nyquist.
pub fn check_harmonic_aliasing<T: Real>(sample_rate: T, f_max: T, l_max: usize) -> bool {
    let top = T::from_usize_lossy(l_max) * f_max;
    let ok = T::lit(2.0) * top <= sample_rate;
    if !ok {
        log::warn!(
            "harmonic {l_max} of a {f_max} Hz drive reaches {top} Hz, above Nyquist for {sample_rate} Hz sampling"
        );
    }
    ok
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subband<T> {
    pub l: usize,
    pub f_low: T,
    pub f_high: T,
    pub bandwidth: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandPlan<T> {
    pub bands: Vec<Subband<T>>,
    /// `f_high(L) - f_low(1)`.
    pub total_span: T,
    /// Adjacent harmonic pairs whose bands overlap.
    pub overlaps: Vec<(usize, usize)>,
}

impl<T: Real> SubbandPlan<T> {
    pub fn is_disjoint(&self) -> bool {
        self.overlaps.is_empty()
    }

    /// Sum of the subband bandwidths.
    pub fn occupied_bandwidth(&self) -> T {
        self.bands.iter().fold(T::zero(), |a, b| a + b.bandwidth)
    }
}

/// Harmonic band `l` spans `[l * f_start, l * (f_start + B)]`.
pub fn subband_plan<T: Real>(lfm: &LfmParams<T>, l_max: usize) -> Result<SubbandPlan<T>> {
    if l_max < 1 {
        bail!(Photonics, "l_max must be >= 1");
    }
    let bands: Vec<Subband<T>> = (1..=l_max)
        .map(|l| {
            let lf = T::from_usize_lossy(l);
            Subband { l, f_low: lf * lfm.f_start, f_high: lf * lfm.f_stop(), bandwidth: lf * lfm.bandwidth }
        })
        .collect();
    let overlaps = bands.windows(2).filter(|w| w[0].f_high > w[1].f_low).map(|w| (w[0].l, w[1].l)).collect();
    let total_span = bands[l_max - 1].f_high - bands[0].f_low;
    Ok(SubbandPlan { bands, total_span, overlaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fft_padded;
    use num_complex::Complex;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// FFT of the exact transfer on a one-cycle cosine drive; bin `l`
    /// holds harmonic `l` with no leakage.
    fn oracle_coefficients(m: f64, theta: f64, l_max: usize) -> Vec<f64> {
        let n = 256;
        let drive = SampledSignal::new((0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect(), n as f64, 0.0)
            .unwrap();
        let mzm = MzmParams::new(m, theta, 193e12, 0.1).unwrap();
        let out = mzm_pd_oracle(&drive, &mzm).unwrap();
        let x: Vec<Complex<f64>> = out.samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let spec = fft_padded(&x, n);
        (0..=l_max).map(|l| if l == 0 { spec[0].re / n as f64 } else { 2.0 * spec[l].re / n as f64 }).collect()
    }

    #[test]
    fn quadrature_bias_kills_even_harmonics() {
        let mzm = MzmParams::new(2.0, PI / 2.0, 193e12, 0.1).unwrap();
        let h = harmonic_amplitudes(&mzm, 6).unwrap();
        assert!(h.magnitude(2) < 1e-12 * h.magnitude(1));
        assert!(h.is_negligible(2) && h.is_negligible(4));
    }

    #[test]
    fn zero_drive_generates_nothing() {
        let mzm = MzmParams::new(0.0, 1.0, 193e12, 0.1).unwrap();
        let h = harmonic_amplitudes(&mzm, 4).unwrap();
        assert_eq!(h.magnitude(1), 0.0);
        assert!((h.coefficients[0] - (1.0 + 1.0f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn static_bias_point() {
        let mzm = MzmParams::new(2.5, 0.7, 193e12, 0.1).unwrap();
        let drive = SampledSignal::new(vec![0.0; 16], 1.0, 0.0).unwrap();
        let out = mzm_pd_oracle(&drive, &mzm).unwrap();
        assert!(out.samples.iter().all(|&v| (v - (1.0 + 0.7f64.cos())).abs() < 1e-15));
    }

    #[test]
    fn coefficients_match_transfer_oracle_at_reference_point() {
        let mzm = MzmParams::new(3.0, PI / 4.0, 193e12, 0.1).unwrap();
        let h = harmonic_amplitudes(&mzm, 4).unwrap();
        let o = oracle_coefficients(3.0, PI / 4.0, 4);
        for l in 0..=4 {
            let rel = (h.coefficients[l] - o[l]).abs() / o[l].abs();
            assert!(rel < 1e-9, "l={l} analytic={} oracle={}", h.coefficients[l], o[l]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn bessel_model_equals_transfer_oracle(m in 0.1f64..4.0, theta in 0.01f64..(PI - 0.01)) {
            let mzm = MzmParams::new(m, theta, 193e12, 0.1).unwrap();
            let h = harmonic_amplitudes(&mzm, 6).unwrap();
            let o = oracle_coefficients(m, theta, 6);
            let scale = o.iter().skip(1).fold(0.0f64, |a, v| a.max(v.abs()));
            for l in 0..=6 {
                let denom = o[l].abs().max(1e-9 * scale);
                prop_assert!((h.coefficients[l] - o[l]).abs() / denom < 1e-6);
            }
        }
    }

    #[test]
    fn in_phase_bias_kills_odd_harmonics() {
        let o = oracle_coefficients(2.2, 0.0, 5);
        let h = harmonic_amplitudes(&MzmParams::new(2.2, 0.0, 193e12, 0.1).unwrap(), 5).unwrap();
        let peak = h.magnitude(2);
        for l in [1, 3, 5] {
            assert!(h.magnitude(l) < 1e-12 * peak);
            assert!(o[l].abs() < 1e-12 * peak);
        }
    }

    #[test]
    fn standard_band_plan() {
        let lfm = LfmParams::new(4.7e9, 1e9, 100e-6, 12e9).unwrap();
        let plan = subband_plan(&lfm, 4).unwrap();
        let expect = [(4.7e9, 5.7e9), (9.4e9, 11.4e9), (14.1e9, 17.1e9), (18.8e9, 22.8e9)];
        for (b, (lo, hi)) in plan.bands.iter().zip(expect) {
            assert_eq!((b.f_low, b.f_high), (lo, hi));
            assert_eq!(b.bandwidth, b.l as f64 * 1e9);
        }
        assert_eq!(plan.total_span, 18.1e9);
        assert!(plan.is_disjoint());
        assert_eq!(plan.occupied_bandwidth(), 10e9);
    }

    #[test]
    fn single_harmonic_plan_is_the_drive_band() {
        let lfm = LfmParams::new(4.7e9, 1e9, 100e-6, 12e9).unwrap();
        let plan = subband_plan(&lfm, 1).unwrap();
        assert_eq!(plan.bands.len(), 1);
        assert_eq!((plan.bands[0].f_low, plan.bands[0].f_high), (4.7e9, 5.7e9));
        assert_eq!(plan.total_span, 1e9);
    }

    #[test]
    fn wide_drive_band_overlaps_are_flagged() {
        // 4.7-7.7 GHz: harmonic 1 ends at 7.7, harmonic 2 starts at 9.4 (ok);
        // harmonic 2 ends at 15.4, harmonic 3 starts at 14.1 (overlap)
        let lfm = LfmParams::new(4.7e9, 3e9, 100e-6, 40e9).unwrap();
        let plan = subband_plan(&lfm, 4).unwrap();
        assert_eq!(plan.overlaps, vec![(2, 3), (3, 4)]);
        assert!(!plan.is_disjoint());
    }

    #[test]
    fn aliasing_check() {
        assert!(check_harmonic_aliasing(64e9, 5.7e9, 4));
        assert!(!check_harmonic_aliasing(40e9, 5.7e9, 4));
    }
}
