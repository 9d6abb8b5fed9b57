use num_complex::Complex;

use super::{DechirpedRecord, RadarConfig};
use crate::dsp::{analytic_signal, fft_padded, ifft_padded};
use crate::error::{bail, Result};
use crate::photonics::mzm_pd_oracle;
use crate::scalar::Real;
use crate::scene::Scene;
use crate::waveform::{generate_lfm, sample_count, SampledSignal};

/// Waveform-level cross-check of [`super::dechirp_synthesize`].
///
/// Runs the real multiband transmit through the exact modulator transfer
/// at `cfg.lfm.sample_rate`, delays and sums the echoes, beats the
/// positive-frequency sideband family of the reference against the
/// phase-modulated echo, and brick-wall low-passes to the de-chirp rate.
/// Only practical for scaled-down chirps.
pub fn dechirp_waveform_oracle<T: Real>(
    scene: &Scene<T>,
    cfg: &RadarConfig<T>,
    pulse_index: usize,
) -> Result<DechirpedRecord<T>> {
    cfg.validate()?;
    scene.validate()?;
    let lfm = &cfg.lfm;
    let fs = lfm.sample_rate;
    let top = T::from_usize_lossy(cfg.l_max) * lfm.f_stop();
    if fs <= T::lit(2.0) * top {
        bail!(Receiver, "waveform rate {fs} Hz cannot carry harmonic {} up to {top} Hz", cfg.l_max);
    }
    let ratio = (fs / cfg.dechirp_sample_rate).as_f64();
    let decim = ratio.round() as usize;
    if decim == 0 || (ratio - decim as f64).abs() > 1e-9 * ratio {
        bail!(Receiver, "waveform rate must be an integer multiple of the de-chirp rate");
    }
    let n_fast = sample_count(lfm.duration, fs);
    let n_out = cfg.record_len();
    if n_fast != n_out * decim {
        bail!(Receiver, "pulse of {n_fast} fast samples does not decimate to {n_out}");
    }

    let t_slow = cfg.pulse_time(pulse_index);
    let echoes = scene.scatterers_at(t_slow);
    let mut tau_max = T::zero();
    for e in &echoes {
        if e.delay >= lfm.duration {
            bail!(Receiver, "echo delay {} s leaves an empty overlap window", e.delay);
        }
        tau_max = tau_max.max(e.delay);
    }

    let h = cfg.harmonics()?;
    let dc = h.coefficients[0];
    let drive = generate_lfm(lfm)?;
    let reference: Vec<T> = mzm_pd_oracle(&drive, &cfg.mzm)?.samples.iter().map(|&v| v - dc).collect();

    let mut echo = vec![T::zero(); n_fast];
    for e in &echoes {
        let delayed: Vec<T> = (0..n_fast).map(|i| lfm.value_at(drive.time(i) - e.delay)).collect();
        let pd = mzm_pd_oracle(&SampledSignal::new(delayed, fs, T::zero())?, &cfg.mzm)?;
        for (i, (acc, v)) in echo.iter_mut().zip(&pd.samples).enumerate() {
            if drive.time(i) >= e.delay {
                *acc = *acc + e.amplitude * (*v - dc);
            }
        }
    }

    let beta = cfg.mzm.pm_index;
    let ra = analytic_signal(&reference);
    let ea = analytic_signal(&echo);
    let beat: Vec<Complex<T>> = ra.iter().zip(&ea).map(|(r, e)| r * (e * beta).conj()).collect();

    // keep |f| < fs_d / 2, then resample onto the de-chirp grid
    let spec = fft_padded(&beat, n_fast);
    let zero = Complex::new(T::zero(), T::zero());
    let mut low = vec![zero; n_out];
    let half = n_out.div_ceil(2);
    low[..half].copy_from_slice(&spec[..half]);
    for i in half..n_out {
        if 2 * i == n_out {
            continue;
        }
        low[i] = spec[n_fast - (n_out - i)];
    }
    let scale = T::one() / T::from_usize_lossy(n_fast);
    let samples = ifft_padded(&low, n_out).into_iter().map(|v| v * scale).collect();
    let valid_from = (tau_max * cfg.dechirp_sample_rate).ceil().as_f64() as usize;
    Ok(DechirpedRecord {
        samples,
        sample_rate: cfg.dechirp_sample_rate,
        pulse_index,
        t_slow,
        valid_from: valid_from.max(cfg.valid_from()),
        band: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::Window;
    use crate::receiver::dechirp_synthesize;
    use crate::scene::PointScatterer;
    use crate::waveform::LfmParams;

    fn scaled() -> RadarConfig<f64> {
        RadarConfig {
            lfm: LfmParams::new(47e6, 10e6, 100e-6, 1e9).unwrap(),
            prf: 5e3,
            dechirp_sample_rate: 4e6,
            range_window: (140.0, 160.0),
            ..RadarConfig::standard()
        }
    }

    /// Hann-windowed magnitude spectrum of the valid samples, padded 16x.
    fn spectrum(rec: &DechirpedRecord<f64>) -> (Vec<f64>, f64) {
        let x = rec.valid();
        let w: Vec<f64> = Window::Hann.coefficients(x.len());
        let xw: Vec<_> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
        let m = 16 * x.len().next_power_of_two();
        let s = fft_padded(&xw, m);
        (s.iter().map(|v| v.norm()).collect(), rec.sample_rate / m as f64)
    }

    fn peak_near(s: &[f64], df: f64, f: f64, span: f64) -> (f64, f64) {
        let lo = ((f - span) / df) as usize;
        let hi = ((f + span) / df) as usize;
        let i = (lo..=hi).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        (i as f64 * df, s[i])
    }

    #[test]
    fn oracle_agrees_with_analytic_model() {
        let cfg = scaled();
        let scene = Scene::fixed(vec![PointScatterer::at_range(150.0, 1.0).unwrap()]).unwrap();
        let tau = scene.scatterers_at(0.0)[0].delay;
        let oracle = dechirp_waveform_oracle(&scene, &cfg, 0).unwrap();
        let mut model = dechirp_synthesize(&scene, &cfg, 0).unwrap();
        model.valid_from = oracle.valid_from;
        let (so, df) = spectrum(&oracle);
        let (sm, _) = spectrum(&model);
        let bin = cfg.dechirp_sample_rate / cfg.record_len() as f64;
        for l in 1..=4 {
            let f = l as f64 * 1e11 * tau;
            let (fo, ao) = peak_near(&so, df, f, 2.0 * bin);
            let (fm, am) = peak_near(&sm, df, f, 2.0 * bin);
            assert!((fo - fm).abs() <= bin, "l={l}: oracle {fo} model {fm}");
            let db = 20.0 * (ao / am).log10();
            assert!(db.abs() < 1.0, "l={l}: magnitude mismatch {db} dB");
        }
    }

    #[test]
    fn cross_harmonic_products_are_filtered() {
        let cfg = scaled();
        let scene = Scene::fixed(vec![PointScatterer::at_range(150.0, 1.0).unwrap()]).unwrap();
        let tau = scene.scatterers_at(0.0)[0].delay;
        let oracle = dechirp_waveform_oracle(&scene, &cfg, 0).unwrap();
        let (s, df) = spectrum(&oracle);
        let peak = s.iter().cloned().fold(0.0, f64::max);
        // Hann mainlobe half-width is 2 bins of the unpadded record
        let guard = 3.0 * cfg.dechirp_sample_rate / oracle.valid().len() as f64;
        let tones: Vec<f64> = (1..=4).map(|l| l as f64 * 1e11 * tau).collect();
        for (i, &v) in s.iter().enumerate() {
            let f = i as f64 * df;
            let f = if f > cfg.dechirp_sample_rate / 2.0 { f - cfg.dechirp_sample_rate } else { f };
            if tones.iter().any(|t| (f - t).abs() < guard) {
                continue;
            }
            assert!(20.0 * (v / peak).log10() < -40.0, "spur at {f} Hz: {} dB", 20.0 * (v / peak).log10());
        }
    }

    #[test]
    fn echo_after_pulse_end_is_rejected() {
        let cfg = scaled();
        let scene = Scene::fixed(vec![PointScatterer::at_range(16_000.0, 1.0).unwrap()]).unwrap();
        let err = dechirp_waveform_oracle(&scene, &cfg, 0).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }

    #[test]
    fn infeasible_rate_is_rejected() {
        let mut cfg = scaled();
        cfg.lfm.sample_rate = 400e6;
        let scene = Scene::fixed(vec![PointScatterer::at_range(150.0, 1.0).unwrap()]).unwrap();
        assert!(dechirp_waveform_oracle(&scene, &cfg, 0).is_err());
    }
}
