use crate::error::{bail, Result};
use crate::photonics::{harmonic_amplitudes, HarmonicSpectrum, MzmParams};
use crate::scalar::{c, Real};
use crate::waveform::{sample_count, LfmParams};

/// Receive-chain parameters shared by synthesis, subband separation and
/// range processing.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarConfig<T> {
    pub lfm: LfmParams<T>,
    pub mzm: MzmParams<T>,
    pub l_max: usize,
    /// Pulse repetition frequency, Hz.
    pub prf: T,
    pub dechirp_sample_rate: T,
    /// `(r_min, r_max)`, m.
    pub range_window: (T, T),
}

impl<T: Real> RadarConfig<T> {
    /// 4.7-5.7 GHz, 100 us chirp, four harmonics, 1.9-2.1 m window.
    pub fn standard() -> Self {
        Self {
            lfm: LfmParams::new(T::lit(4.7e9), T::lit(1e9), T::lit(100e-6), T::lit(12e9))
                .expect("default chirp is valid"),
            mzm: MzmParams {
                modulation_index: T::lit(3.0),
                bias_angle: T::FRAC_PI_4(),
                carrier_freq: T::lit(193.1e12),
                pm_index: T::lit(0.1),
            },
            l_max: 4,
            prf: T::lit(2e3),
            dechirp_sample_rate: T::lit(20e6),
            range_window: (T::lit(1.9), T::lit(2.1)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lfm.validate()?;
        self.mzm.validate()?;
        if self.l_max < 1 {
            bail!(Receiver, "l_max must be >= 1");
        }
        let (r0, r1) = self.range_window;
        if !(r0.is_finite() && r1.is_finite()) || r0 <= T::zero() || r1 <= r0 {
            bail!(Receiver, "range window ({r0}, {r1}) must satisfy 0 < r_min < r_max");
        }
        if !(self.prf.is_finite() && self.prf > T::zero()) {
            bail!(Receiver, "PRF must be positive");
        }
        if !(self.dechirp_sample_rate.is_finite() && self.dechirp_sample_rate > T::zero()) {
            bail!(Receiver, "de-chirp sample rate must be positive");
        }
        let (_, tau_max) = self.delay_bounds();
        if T::one() / self.prf < self.lfm.duration + tau_max {
            bail!(
                Receiver,
                "PRI {} s shorter than pulse plus maximum delay {} s",
                T::one() / self.prf,
                self.lfm.duration + tau_max
            );
        }
        let top = self.tone_frequency(self.l_max, tau_max);
        if self.dechirp_sample_rate <= T::lit(2.0) * top {
            bail!(
                Receiver,
                "de-chirp sample rate {} Hz does not exceed twice the highest tone {} Hz",
                self.dechirp_sample_rate,
                top
            );
        }
        Ok(())
    }

    pub fn chirp_rate(&self) -> T {
        self.lfm.chirp_rate
    }

    /// `(2 r_min / c, 2 r_max / c)`.
    pub fn delay_bounds(&self) -> (T, T) {
        let k = T::lit(2.0) / c::<T>();
        (k * self.range_window.0, k * self.range_window.1)
    }

    /// De-chirp tone of harmonic `l` for delay `tau`: `l k tau`.
    pub fn tone_frequency(&self, l: usize, tau: T) -> T {
        T::from_usize_lossy(l) * self.lfm.chirp_rate * tau
    }

    /// `[l k tau_min, l k tau_max]`.
    pub fn tone_interval(&self, l: usize) -> (T, T) {
        let (a, b) = self.delay_bounds();
        (self.tone_frequency(l, a), self.tone_frequency(l, b))
    }

    /// Adjacent harmonic pairs whose tone intervals overlap.
    pub fn tone_clashes(&self) -> Vec<(usize, usize)> {
        (1..self.l_max)
            .filter(|&l| self.tone_interval(l).1 >= self.tone_interval(l + 1).0)
            .map(|l| (l, l + 1))
            .collect()
    }

    pub fn record_len(&self) -> usize {
        sample_count(self.lfm.duration, self.dechirp_sample_rate)
    }

    /// First sample with `t >= tau_max`: every echo in the window fully
    /// overlaps the reference from here on.
    pub fn valid_from(&self) -> usize {
        let (_, tau_max) = self.delay_bounds();
        (tau_max * self.dechirp_sample_rate).ceil().as_f64() as usize
    }

    pub fn harmonics(&self) -> Result<HarmonicSpectrum<T>> {
        harmonic_amplitudes(&self.mzm, self.l_max)
    }

    /// De-chirp gains `w_1 ..= w_L`.
    pub fn band_gains(&self) -> Result<Vec<T>> {
        let h = self.harmonics()?;
        Ok((1..=self.l_max).map(|l| h.dechirp_gain(l, self.mzm.pm_index)).collect())
    }

    /// Range resolution of harmonic `l`, `c / (2 l B)`.
    pub fn range_resolution(&self, l: usize) -> T {
        c::<T>() / (T::lit(2.0) * T::from_usize_lossy(l) * self.lfm.bandwidth)
    }

    pub fn pulse_time(&self, pulse_index: usize) -> T {
        T::from_usize_lossy(pulse_index) / self.prf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let cfg = RadarConfig::<f64>::standard();
        cfg.validate().unwrap();
        assert!(cfg.tone_clashes().is_empty());
        assert_eq!(cfg.record_len(), 2000);
        assert_eq!(cfg.valid_from(), 1);
        assert!((cfg.range_resolution(1) - 0.1499).abs() < 1e-4);
    }

    #[test]
    fn wide_window_clashes() {
        let mut cfg = RadarConfig::<f64>::standard();
        cfg.range_window = (1.0, 5.0);
        cfg.validate().unwrap();
        assert_eq!(cfg.tone_clashes(), vec![(1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn nyquist_and_pri_checks() {
        let mut cfg = RadarConfig::<f64>::standard();
        cfg.dechirp_sample_rate = 1e6;
        assert!(cfg.validate().is_err());
        let mut cfg = RadarConfig::<f64>::standard();
        cfg.prf = 1e4 + 1.0;
        assert!(cfg.validate().is_err());
    }
}
