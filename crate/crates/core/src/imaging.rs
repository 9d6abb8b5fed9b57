//! Range-Doppler ISAR: pulse-train collection, image formation and blob
//! counting.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::{fft_padded, next_pow2, Window};
use crate::error::{bail, Error, Result};
use crate::fusion::{FusionMode, FusionOptions, FusionPipeline};
use crate::receiver::{dechirp_synthesize, RadarConfig, SubbandFilterBank, MIN_PAD};
use crate::scalar::SPEED_OF_LIGHT;
use crate::scene::{Scene, Targets};

/// Which data feed the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImagingMode {
    Subband(usize),
    FusedDirect,
    FusedAllPole,
}

impl fmt::Display for ImagingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImagingMode::Subband(l) => write!(f, "subband:{l}"),
            ImagingMode::FusedDirect => f.write_str("fused-direct"),
            ImagingMode::FusedAllPole => f.write_str("fused-allpole"),
        }
    }
}

impl FromStr for ImagingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fused-direct" => Ok(ImagingMode::FusedDirect),
            "fused-allpole" => Ok(ImagingMode::FusedAllPole),
            _ => {
                let l =
                    s.strip_prefix("subband:").and_then(|v| v.parse::<usize>().ok()).filter(|&l| l >= 1).ok_or_else(
                        || format!("unknown mode '{s}', expected subband:L, fused-direct or fused-allpole"),
                    )?;
                Ok(ImagingMode::Subband(l))
            }
        }
    }
}

/// Pulse-by-column data of one CPI.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    /// One row per pulse: subband fast-time samples, or fused spectrum bins.
    pub rows: Vec<Vec<Complex64>>,
    pub t_slow: Vec<f64>,
    pub mode: ImagingMode,
    /// First fast-time sample used in range compression (subband mode).
    pub valid_from: usize,
    /// Fast-time rate (subband) or bin spacing (fused).
    pub col_spacing: f64,
    /// Lowest fused frequency (fused modes).
    pub f_min: f64,
    /// Window applied across columns before range compression in fused
    /// modes (per-run taper for direct fusion).
    pub col_weights: Option<Vec<f64>>,
}

impl DataMatrix {
    pub fn n_pulses(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    /// Energy of the columns that enter range compression.
    pub fn energy(&self) -> f64 {
        let start = match self.mode {
            ImagingMode::Subband(_) => self.valid_from,
            _ => 0,
        };
        self.rows.iter().map(|r| r[start..].iter().map(|v| v.norm_sqr()).sum::<f64>()).sum()
    }
}

/// Runs the receive chain for `n_pulses` pulses at `t = i / prf`.
///
/// Pulses are processed in parallel; rows come back in pulse order and a
/// failing pulse is reported with its index.
pub fn collect_cpi(
    scene: &Scene<f64>,
    cfg: &RadarConfig<f64>,
    n_pulses: usize,
    mode: ImagingMode,
    fusion: &FusionOptions,
) -> Result<DataMatrix> {
    if n_pulses < 2 {
        bail!(Imaging, "a CPI needs at least 2 pulses");
    }
    cfg.validate()?;
    scene.validate()?;
    let t_slow: Vec<f64> = (0..n_pulses).map(|i| cfg.pulse_time(i)).collect();
    let wrap = |index: usize| move |e: Error| Error::Pulse { index, source: Box::new(e) };
    match mode {
        ImagingMode::Subband(l) => {
            if l > cfg.l_max {
                bail!(Imaging, "subband {l} outside 1..={}", cfg.l_max);
            }
            let bank = SubbandFilterBank::new(cfg)?;
            let rows = (0..n_pulses)
                .into_par_iter()
                .map(|i| {
                    let rec = dechirp_synthesize(scene, cfg, i).map_err(wrap(i))?;
                    Ok(bank.extract(&rec, l).map_err(wrap(i))?.samples)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DataMatrix {
                rows,
                t_slow,
                mode,
                valid_from: cfg.valid_from(),
                col_spacing: cfg.dechirp_sample_rate,
                f_min: 0.0,
                col_weights: None,
            })
        }
        ImagingMode::FusedDirect | ImagingMode::FusedAllPole => {
            let fmode = if mode == ImagingMode::FusedDirect { FusionMode::Direct } else { FusionMode::AllPole };
            let pipe = FusionPipeline::new(cfg, FusionOptions { mode: fmode, ..*fusion })?;
            let results = (0..n_pulses)
                .into_par_iter()
                .map(|i| {
                    let rec = dechirp_synthesize(scene, cfg, i).map_err(wrap(i))?;
                    pipe.process(&rec).map_err(wrap(i))
                })
                .collect::<Result<Vec<_>>>()?;
            let first = &results[0];
            let (f_min, df) = (first.gapped.f_min, first.gapped.delta_f);
            let weights = pipe.weights(first);
            Ok(DataMatrix {
                rows: results.into_iter().map(|r| r.spectrum).collect(),
                t_slow,
                mode,
                valid_from: 0,
                col_spacing: df,
                f_min,
                col_weights: Some(weights),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingOptions {
    pub range_window: Window,
    pub doppler_window: Window,
    /// Slow-time FFT length as a multiple of the pulse count.
    pub doppler_pad: usize,
    /// Platform rotation rate; `None` leaves the second axis in Hz.
    pub angular_rate: Option<f64>,
    /// Keep only this range interval (m).
    pub crop: Option<(f64, f64)>,
}

impl Default for ImagingOptions {
    fn default() -> Self {
        Self {
            range_window: Window::Hann,
            doppler_window: Window::Hann,
            doppler_pad: 4,
            angular_rate: None,
            crop: None,
        }
    }
}

impl ImagingOptions {
    /// Rotation rate of a rotating-platform scene, cropped to the radar's
    /// range window.
    pub fn for_scene(scene: &Scene<f64>, cfg: &RadarConfig<f64>) -> Self {
        let angular_rate = match &scene.targets {
            Targets::Rotating(p) => Some(p.angular_rate),
            Targets::Static(_) => None,
        };
        Self { angular_rate, crop: Some(cfg.range_window), ..Self::default() }
    }
}

/// Range / cross-range intensity map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsarImage {
    pub range_axis: Vec<f64>,
    /// Cross-range in m, or Doppler in Hz when no rotation rate was given.
    pub crossrange_axis: Vec<f64>,
    pub crossrange_is_doppler: bool,
    /// Row-major, one row per cross-range cell.
    pub intensity: Vec<f64>,
    /// Center wavelength used for the cross-range scale.
    pub wavelength: f64,
}

impl IsarImage {
    pub fn n_range(&self) -> usize {
        self.range_axis.len()
    }

    pub fn n_cross(&self) -> usize {
        self.crossrange_axis.len()
    }

    pub fn at(&self, cross: usize, range: usize) -> f64 {
        self.intensity[cross * self.n_range() + range]
    }

    pub fn energy(&self) -> f64 {
        self.intensity.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// Sum of intensity over all range cells, per cross-range row.
    pub fn row_energy(&self) -> Vec<f64> {
        self.intensity.chunks(self.n_range()).map(|r| r.iter().sum()).collect()
    }
}

/// Complex range lines: range compression of every row.
fn range_compress(
    dm: &DataMatrix,
    cfg: &RadarConfig<f64>,
    opts: &ImagingOptions,
) -> Result<(Vec<f64>, Vec<Vec<Complex64>>, f64)> {
    match dm.mode {
        ImagingMode::Subband(l) => {
            let n = dm.n_cols() - dm.valid_from;
            let w: Vec<f64> = opts.range_window.coefficients(n);
            let m = next_pow2(MIN_PAD * n);
            let dr = SPEED_OF_LIGHT * dm.col_spacing / (2.0 * l as f64 * cfg.chirp_rate() * m as f64);
            let lines = dm
                .rows
                .par_iter()
                .map(|row| {
                    let x: Vec<Complex64> = row[dm.valid_from..].iter().zip(&w).map(|(v, g)| v * g).collect();
                    // conjugate so slow-time phase runs as exp(-j 2 pi f tau)
                    fft_padded(&x, m).into_iter().take(m / 2).map(|v| v.conj()).collect()
                })
                .collect();
            let lf = l as f64;
            let fc = lf * (cfg.lfm.f_start + 0.5 * cfg.lfm.bandwidth);
            Ok(((0..m / 2).map(|i| i as f64 * dr).collect(), lines, SPEED_OF_LIGHT / fc))
        }
        ImagingMode::FusedDirect | ImagingMode::FusedAllPole => {
            let n = dm.n_cols();
            let w = match &dm.col_weights {
                Some(w) => w.clone(),
                None => opts.range_window.coefficients(n),
            };
            // the taper of all-pole spectra follows the imaging option
            let w = if dm.mode == ImagingMode::FusedAllPole { opts.range_window.coefficients(n) } else { w };
            let m = next_pow2(crate::fusion::FUSED_PAD * n);
            let dr = 0.5 * SPEED_OF_LIGHT / (m as f64 * dm.col_spacing);
            let plan = FftPlanner::new().plan_fft_inverse(m);
            let lines = dm
                .rows
                .par_iter()
                .map(|row| {
                    let mut buf = vec![Complex64::new(0.0, 0.0); m];
                    for (b, (v, g)) in buf.iter_mut().zip(row.iter().zip(&w)) {
                        *b = v * g;
                    }
                    plan.process(&mut buf);
                    buf
                })
                .collect();
            let f_max = dm.f_min + (n - 1) as f64 * dm.col_spacing;
            Ok(((0..m).map(|i| i as f64 * dr).collect(), lines, 2.0 * SPEED_OF_LIGHT / (dm.f_min + f_max)))
        }
    }
}

/// Range compression per pulse, then a windowed FFT across slow time for
/// every range cell. Doppler maps to cross-range by `x = f_d lambda / (2 w)`.
///
/// Intensities are `|X|^2 / (M_range M_doppler)`, so with rect windows and
/// no crop the image energy equals the data energy.
pub fn isar_image(dm: &DataMatrix, cfg: &RadarConfig<f64>, opts: &ImagingOptions) -> Result<IsarImage> {
    if dm.n_pulses() == 0 || dm.n_cols() == 0 {
        bail!(Imaging, "empty data matrix");
    }
    if dm.rows.iter().any(|r| r.len() != dm.n_cols()) {
        bail!(Imaging, "data matrix rows differ in length");
    }
    let scale_rate = match opts.angular_rate {
        Some(w) if w == 0.0 || !w.is_finite() => {
            bail!(Imaging, "cross-range scaling needs a nonzero rotation rate")
        }
        other => other,
    };
    let (ranges, lines, wavelength) = range_compress(dm, cfg, opts)?;
    let m_range = lines[0].len() * if matches!(dm.mode, ImagingMode::Subband(_)) { 2 } else { 1 };
    let keep: Vec<usize> = match opts.crop {
        Some((lo, hi)) => (0..ranges.len()).filter(|&i| ranges[i] >= lo && ranges[i] <= hi).collect(),
        None => (0..ranges.len()).collect(),
    };
    if keep.is_empty() {
        bail!(Imaging, "crop window holds no range cell");
    }

    let np = dm.n_pulses();
    let nd = next_pow2(np * opts.doppler_pad.max(1));
    let wd: Vec<f64> = opts.doppler_window.coefficients(np);
    let plan = FftPlanner::<f64>::new().plan_fft_forward(nd);
    let norm = 1.0 / (m_range as f64 * nd as f64);
    // column-wise slow-time FFT, fftshifted
    let cols: Vec<Vec<f64>> = keep
        .par_iter()
        .map(|&j| {
            let mut buf = vec![Complex64::new(0.0, 0.0); nd];
            for (i, b) in buf.iter_mut().take(np).enumerate() {
                *b = lines[i][j] * wd[i];
            }
            plan.process(&mut buf);
            (0..nd).map(|k| buf[(k + nd / 2) % nd].norm_sqr() * norm).collect()
        })
        .collect();

    let prf = cfg.prf;
    let doppler: Vec<f64> = (0..nd).map(|k| (k as f64 - (nd / 2) as f64) * prf / nd as f64).collect();
    let (mut axis, flip) = match scale_rate {
        Some(w) => {
            let s = wavelength / (2.0 * w);
            (doppler.iter().map(|f| f * s).collect::<Vec<_>>(), s < 0.0)
        }
        None => (doppler, false),
    };
    let nr = keep.len();
    let mut intensity = vec![0.0; nd * nr];
    for (c, col) in cols.iter().enumerate() {
        for (k, &v) in col.iter().enumerate() {
            let row = if flip { nd - 1 - k } else { k };
            intensity[row * nr + c] = v;
        }
    }
    if flip {
        axis.reverse();
    }
    Ok(IsarImage {
        range_axis: keep.iter().map(|&j| ranges[j]).collect(),
        crossrange_axis: axis,
        crossrange_is_doppler: scale_rate.is_none(),
        intensity,
        wavelength,
    })
}

/// Detected image peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub range: f64,
    pub crossrange: f64,
    pub intensity: f64,
}

/// Local maxima over a 5x5 neighbourhood above `floor_db` (relative to
/// the image maximum), kept greedily when the intensity along the straight
/// line to every stronger kept blob dips at least `min_sep_db` below the
/// weaker of the two.
pub fn detect_blobs(img: &IsarImage, floor_db: f64, min_sep_db: f64) -> Vec<Blob> {
    let (nc, nr) = (img.n_cross(), img.n_range());
    let peak = img.max();
    if !(peak > 0.0) {
        return vec![];
    }
    let floor = peak * 10f64.powf(floor_db / 10.0);
    let mut cands: Vec<(usize, usize)> = Vec::new();
    for a in 0..nc {
        for b in 0..nr {
            let v = img.at(a, b);
            if v < floor {
                continue;
            }
            let is_max = (a.saturating_sub(2)..(a + 3).min(nc))
                .all(|i| (b.saturating_sub(2)..(b + 3).min(nr)).all(|j| img.at(i, j) <= v));
            if is_max {
                cands.push((a, b));
            }
        }
    }
    cands.sort_by(|p, q| img.at(q.0, q.1).total_cmp(&img.at(p.0, p.1)).then(p.cmp(q)));
    let ratio = 10f64.powf(min_sep_db / 10.0);
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for c in cands {
        let v = img.at(c.0, c.1);
        let separated = kept.iter().all(|k| {
            let steps = 2 * (k.0.abs_diff(c.0) + k.1.abs_diff(c.1)).max(1);
            let valley = (0..=steps)
                .map(|s| {
                    let t = s as f64 / steps as f64;
                    let i = (c.0 as f64 + t * (k.0 as f64 - c.0 as f64)).round() as usize;
                    let j = (c.1 as f64 + t * (k.1 as f64 - c.1 as f64)).round() as usize;
                    img.at(i, j)
                })
                .fold(f64::INFINITY, f64::min);
            v.min(img.at(k.0, k.1)) >= ratio * valley
        });
        if separated {
            kept.push(c);
        }
    }
    kept.into_iter()
        .map(|(a, b)| Blob { range: img.range_axis[b], crossrange: img.crossrange_axis[a], intensity: img.at(a, b) })
        .collect()
}
