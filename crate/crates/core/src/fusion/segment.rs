use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::receiver::{band_tones, BandTones, DechirpedRecord, RadarConfig};

/// Target spectral response `H(f) = sum a_i exp(-j 2 pi f tau_i)` sampled
/// over the RF support of one harmonic subband.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSegment {
    pub l: usize,
    /// Uniform grid, spacing `delta_f`, aligned to multiples of `delta_f`
    /// from `grid_origin`.
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub delta_f: f64,
    pub grid_origin: f64,
    /// Nominal band `[l f_start, l f_stop]`.
    pub nominal: (f64, f64),
}

impl BandSegment {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs.len() != self.values.len() {
            bail!(Fusion, "segment l={} has {} frequencies but {} values", self.l, self.freqs.len(), self.values.len());
        }
        if !(self.delta_f > 0.0) {
            bail!(Fusion, "segment grid spacing must be positive");
        }
        for w in self.freqs.windows(2) {
            if ((w[1] - w[0]) - self.delta_f).abs() > 1e-6 * self.delta_f {
                bail!(Fusion, "segment l={} grid is not uniform at {} Hz", self.l, w[0]);
            }
        }
        if self.values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            bail!(Fusion, "segment l={} holds non-finite values", self.l);
        }
        Ok(())
    }
}

/// Maps band tones onto RF frequency.
///
/// A de-chirped sample at fast time `t` is `H` at `f = l (f_start + k t)`
/// apart from the residual video phase `-pi l k tau^2`. Each tone `f_j`
/// of the band sits at `l k tau`, so the residual phase is removed by the
/// factor `exp(j pi f_j^2 / (l k))`. The corrected tone sum is then read
/// at the fast times that land on the global grid, conjugated and
/// divided by the channel gain `w_l`.
pub fn segment_from_tones(tones: &BandTones, cfg: &RadarConfig<f64>, delta_f: f64) -> Result<BandSegment> {
    let l = tones.l;
    let lf = l as f64;
    let k = cfg.chirp_rate();
    let fs = cfg.dechirp_sample_rate;
    if !(delta_f > 0.0) || !delta_f.is_finite() {
        bail!(Fusion, "grid spacing must be positive");
    }
    let native = lf * k / fs;
    if delta_f < native * (1.0 - 1e-9) {
        bail!(
            Fusion,
            "grid spacing {delta_f} Hz is finer than the native {native} Hz sample spacing of harmonic {l}; raise the de-chirp sample rate"
        );
    }
    let gains = cfg.band_gains()?;
    let h = cfg.harmonics()?;
    if h.is_negligible(l) || gains[l - 1] == 0.0 {
        bail!(Fusion, "harmonic {l} carries no usable energy at this bias point");
    }
    let w = gains[l - 1];
    let f0 = cfg.lfm.f_start;
    let t_first = cfg.valid_from() as f64 / fs;
    let t_last = (cfg.record_len() - 1) as f64 / fs;
    let (lo, hi) = (lf * (f0 + k * t_first), lf * (f0 + k * t_last));
    let origin = f0;
    let j0 = ((lo - origin) / delta_f - 1e-9).ceil() as i64;
    let j1 = ((hi - origin) / delta_f + 1e-9).floor() as i64;
    if j1 < j0 {
        bail!(Fusion, "harmonic {l} support holds no grid point");
    }
    let corrected: Vec<Complex64> = tones
        .freqs
        .iter()
        .zip(&tones.coeffs)
        .map(|(&f, &c)| c * Complex64::from_polar(1.0, PI * f * f / (lf * k)))
        .collect();
    let mut freqs = Vec::with_capacity((j1 - j0 + 1) as usize);
    let mut values = Vec::with_capacity(freqs.capacity());
    for j in j0..=j1 {
        let fg = origin + j as f64 * delta_f;
        let t = (fg / lf - f0) / k;
        let v: Complex64 =
            tones.freqs.iter().zip(&corrected).map(|(&f, &c)| c * Complex64::from_polar(1.0, TAU * f * t)).sum();
        freqs.push(fg);
        values.push(v.conj() / w);
    }
    let seg = BandSegment { l, freqs, values, delta_f, grid_origin: origin, nominal: (lf * f0, lf * cfg.lfm.f_stop()) };
    seg.validate()?;
    Ok(seg)
}

/// Spectral response of subband `l` on a `delta_f` grid from a separated
/// subband record.
pub fn to_band_segment(
    slice: &DechirpedRecord<f64>,
    l: usize,
    cfg: &RadarConfig<f64>,
    delta_f: f64,
) -> Result<BandSegment> {
    let tones = band_tones(slice, l, cfg)?;
    segment_from_tones(&tones, cfg, delta_f)
}

/// Closed-form `sum a_i exp(-j 2 pi f tau_i)`.
pub fn closed_form_response(freqs: &[f64], delays: &[f64], amplitudes: &[Complex64]) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|&f| delays.iter().zip(amplitudes).map(|(&t, &a)| a * Complex64::from_polar(1.0, -TAU * f * t)).sum())
        .collect()
}
