use num_complex::Complex;

use super::RadarConfig;
use crate::error::{bail, Result};
use crate::scalar::Real;
use crate::scene::{add_complex_noise, derive_seed, Echo, Scene};

/// One pulse of analytic de-chirped data.
#[derive(Debug, Clone, PartialEq)]
pub struct DechirpedRecord<T> {
    pub samples: Vec<Complex<T>>,
    pub sample_rate: T,
    pub pulse_index: usize,
    pub t_slow: T,
    /// Samples before this index precede full echo overlap.
    pub valid_from: usize,
    /// Harmonic order once the record has been reduced to one subband.
    pub band: Option<usize>,
}

impl<T: Real> DechirpedRecord<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> T {
        T::from_usize_lossy(n) / self.sample_rate
    }

    pub fn valid(&self) -> &[Complex<T>] {
        &self.samples[self.valid_from.min(self.samples.len())..]
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Sum of `w_l a exp(j (2 pi l k tau t + psi_l))` over echoes and
/// harmonics, with `psi_l = 2 pi l f0 tau - pi l k tau^2`.
pub fn synthesize_echoes<T: Real>(echoes: &[Echo<T>], cfg: &RadarConfig<T>) -> Result<Vec<Complex<T>>> {
    let gains = cfg.band_gains()?;
    let n = cfg.record_len();
    let fs = cfg.dechirp_sample_rate.as_f64();
    let k = cfg.chirp_rate().as_f64();
    let f0 = cfg.lfm.f_start.as_f64();
    let tau_limit = cfg.lfm.duration.as_f64();
    let tau2 = std::f64::consts::TAU;
    let mut acc = vec![Complex::new(0.0f64, 0.0); n];
    for e in echoes {
        let tau = e.delay.as_f64();
        if !(tau >= 0.0) || tau >= tau_limit {
            bail!(Receiver, "echo delay {tau} s leaves no overlap with the {tau_limit} s pulse");
        }
        for (li, w) in gains.iter().enumerate() {
            let l = (li + 1) as f64;
            let f = l * k * tau;
            if 2.0 * f >= fs {
                bail!(Receiver, "harmonic {} tone for delay {tau} s at {f} Hz is above Nyquist", li + 1);
            }
            let amp = w.as_f64() * e.amplitude.as_f64();
            if amp == 0.0 {
                continue;
            }
            // frequency in cycles per sample, phase kept in turns to limit growth
            let nu = f / fs;
            let psi = l * f0 * tau - 0.5 * l * k * tau * tau;
            let psi = psi - psi.floor();
            for (i, v) in acc.iter_mut().enumerate() {
                let turns = (nu * i as f64 + psi).fract();
                let (s, co) = (tau2 * turns).sin_cos();
                *v += Complex::new(amp * co, amp * s);
            }
        }
    }
    Ok(acc.into_iter().map(|v| Complex::new(T::lit(v.re), T::lit(v.im))).collect())
}

/// Analytic de-chirped record of pulse `pulse_index` for `scene`.
pub fn dechirp_synthesize<T: Real>(
    scene: &Scene<T>,
    cfg: &RadarConfig<T>,
    pulse_index: usize,
) -> Result<DechirpedRecord<T>> {
    cfg.validate()?;
    scene.validate()?;
    let t_slow = cfg.pulse_time(pulse_index);
    let echoes = scene.scatterers_at(t_slow);
    let mut samples = synthesize_echoes(&echoes, cfg)?;
    if let Some(snr) = scene.noise_snr_db {
        let seed = derive_seed(scene.rng_seed, pulse_index as u64);
        add_complex_noise(&mut samples, None, snr, seed)?;
    }
    Ok(DechirpedRecord {
        samples,
        sample_rate: cfg.dechirp_sample_rate,
        pulse_index,
        t_slow,
        valid_from: cfg.valid_from(),
        band: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fft_padded;
    use crate::scene::PointScatterer;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const C: f64 = crate::SPEED_OF_LIGHT;

    fn one_band_cfg(l_max: usize) -> RadarConfig<f64> {
        RadarConfig { l_max, ..RadarConfig::standard() }
    }

    fn peak_freq(x: &[Complex<f64>], fs: f64, pad: usize) -> f64 {
        let m = x.len() * pad;
        let s = fft_padded(x, m);
        let i = (0..m / 2).max_by(|&a, &b| s[a].norm().total_cmp(&s[b].norm())).unwrap();
        i as f64 * fs / m as f64
    }

    #[test]
    fn two_meter_tone() {
        let cfg = one_band_cfg(1);
        let scene = Scene::fixed(vec![PointScatterer::at_range(2.0, 1.0).unwrap()]).unwrap();
        let rec = dechirp_synthesize(&scene, &cfg, 0).unwrap();
        assert_eq!(rec.len(), 2000);
        let f = peak_freq(&rec.samples, 20e6, 64);
        assert!((f - 1e13 * 4.0 / C).abs() < 20e6 / (2000.0 * 64.0));
        assert!((1e13 * 4.0 / C - 133.42e3).abs() < 10.0);
    }

    #[test]
    fn zero_delay_is_dc() {
        let cfg = RadarConfig::<f64>::standard();
        let rec = synthesize_echoes(&[Echo { delay: 0.0, amplitude: 1.0 }], &cfg).unwrap();
        let total: f64 = cfg.band_gains().unwrap().iter().sum();
        assert!(rec.iter().all(|v| (v - Complex::new(total, 0.0)).norm() < 1e-12));
    }

    /// Harmonic `l` alone: difference of two syntheses with `l_max = l`
    /// and `l_max = l - 1`.
    fn band_only(tau: f64, a: f64, l: usize) -> Vec<Complex<f64>> {
        let echo = [Echo { delay: tau, amplitude: a }];
        let with = synthesize_echoes(&echo, &one_band_cfg(l)).unwrap();
        if l == 1 {
            return with;
        }
        let without = synthesize_echoes(&echo, &one_band_cfg(l - 1)).unwrap();
        with.iter().zip(&without).map(|(x, y)| x - y).collect()
    }

    #[test]
    fn harmonic_tones_in_integer_ratio() {
        let tau = 2.0 * 2.03 / C;
        let pad = 256;
        let bin = 20e6 / (2000.0 * pad as f64);
        let f: Vec<f64> = (1..=4).map(|l| peak_freq(&band_only(tau, 1.0, l), 20e6, pad)).collect();
        for l in 1..=4 {
            assert!((f[l - 1] - l as f64 * f[0]).abs() < 2.0 * l as f64 * bin);
            assert!((f[l - 1] - l as f64 * 1e13 * tau).abs() < bin);
        }
    }

    #[test]
    fn far_target_trips_nyquist() {
        let mut cfg = RadarConfig::<f64>::standard();
        cfg.dechirp_sample_rate = 2.0 * 4.0 * 1e13 * 2.0 * 2.1 / C * 1.01;
        let scene = Scene::fixed(vec![PointScatterer::at_range(2.5, 1.0).unwrap()]).unwrap();
        let err = dechirp_synthesize(&scene, &cfg, 0).unwrap_err();
        assert!(err.to_string().contains("harmonic 4"), "{err}");
    }

    #[test]
    fn noise_is_per_pulse_deterministic() {
        let cfg = RadarConfig::<f64>::standard();
        let mut scene = Scene::fixed(vec![PointScatterer::at_range(2.0, 1.0).unwrap()]).unwrap();
        scene.noise_snr_db = Some(10.0);
        scene.rng_seed = 5;
        let a = dechirp_synthesize(&scene, &cfg, 3).unwrap();
        let b = dechirp_synthesize(&scene, &cfg, 3).unwrap();
        let c = dechirp_synthesize(&scene, &cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn single_precision_tracks_double() {
        let c64 = RadarConfig::<f64>::standard();
        let c32 = RadarConfig::<f32>::standard();
        let s64 = Scene::fixed(vec![PointScatterer::at_range(2.0, 1.0).unwrap()]).unwrap();
        let s32 = Scene::fixed(vec![PointScatterer::at_range(2.0f32, 1.0).unwrap()]).unwrap();
        let a = dechirp_synthesize(&s64, &c64, 0).unwrap();
        let b = dechirp_synthesize(&s32, &c32, 0).unwrap();
        // delay rounding in f32 moves the carrier phase by a few mrad
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - Complex::new(y.re as f64, y.im as f64)).norm() < 5e-3);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn start_phase_law(r in 1.9f64..2.1, a in 0.1f64..2.0) {
            let gains = one_band_cfg(4).band_gains().unwrap();
            let tau = 2.0 * r / C;
            for l in 1..=4usize {
                let v = band_only(tau, a, l)[0];
                let lf = l as f64;
                let psi = 2.0 * PI * lf * 4.7e9 * tau - PI * lf * 1e13 * tau * tau;
                let d = (v.arg() - psi).rem_euclid(2.0 * PI);
                let d = d.min(2.0 * PI - d);
                prop_assert!(d < 1e-6, "l={} phase error {}", l, d);
                prop_assert!((v.norm() - gains[l - 1] * a).abs() < 1e-9);
            }
        }

        #[test]
        fn tone_frequency_law(r in 1.9f64..2.1) {
            let tau = 2.0 * r / C;
            let pad = 16;
            for l in 1..=4usize {
                let f = peak_freq(&band_only(tau, 1.0, l), 20e6, pad);
                prop_assert!((f - l as f64 * 1e13 * tau).abs() <= 20e6 / (2000.0 * pad as f64));
            }
        }
    }
}
