use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{DechirpedRecord, RadarConfig};
use crate::dsp::{fft_padded, next_pow2, Window};
use crate::error::{bail, Result};
use crate::scalar::{c, Real};

/// Minimum zero-padding factor of [`range_profile`].
pub const MIN_PAD: usize = 8;
/// Candidate peaks below this level relative to the profile maximum are
/// ignored by [`resolve_peaks`]. Keeps window sidelobes out of the count.
pub const DEFAULT_PEAK_FLOOR_DB: f64 = -10.0;

/// Magnitude versus range on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeProfile<T> {
    pub ranges: Vec<T>,
    pub magnitudes: Vec<T>,
    pub band_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak<T> {
    pub range: T,
    pub magnitude: T,
}

impl<T: Real> RangeProfile<T> {
    pub fn new(ranges: Vec<T>, magnitudes: Vec<T>, band_label: impl Into<String>) -> Result<Self> {
        if ranges.len() != magnitudes.len() {
            bail!(Receiver, "{} ranges but {} magnitudes", ranges.len(), magnitudes.len());
        }
        if ranges.windows(2).any(|w| !(w[1] > w[0])) {
            bail!(Receiver, "profile ranges must be strictly increasing");
        }
        if magnitudes.iter().any(|m| !m.is_finite() || *m < T::zero()) {
            bail!(Receiver, "profile magnitudes must be finite and >= 0");
        }
        Ok(Self { ranges, magnitudes, band_label: band_label.into() })
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn spacing(&self) -> T {
        if self.len() < 2 {
            T::zero()
        } else {
            self.ranges[1] - self.ranges[0]
        }
    }

    pub fn max_magnitude(&self) -> T {
        self.magnitudes.iter().copied().fold(T::zero(), T::max)
    }

    /// Global maximum.
    pub fn peak(&self) -> Option<Peak<T>> {
        (0..self.len())
            .max_by(|&a, &b| self.magnitudes[a].partial_cmp(&self.magnitudes[b]).unwrap())
            .map(|i| Peak { range: self.ranges[i], magnitude: self.magnitudes[i] })
    }

    /// Copy scaled to unit maximum.
    pub fn normalized(&self) -> Self {
        let m = self.max_magnitude();
        let mut out = self.clone();
        if m > T::zero() {
            out.magnitudes.iter_mut().for_each(|v| *v = *v / m);
        }
        out
    }

    /// Width of the region around the global maximum that stays within
    /// `level_db` of it, with linear interpolation at both crossings.
    pub fn peak_width(&self, level_db: T) -> Option<T> {
        let i = (0..self.len()).max_by(|&a, &b| self.magnitudes[a].partial_cmp(&self.magnitudes[b]).unwrap())?;
        let p = &self.magnitudes;
        let thr = p[i] * T::lit(10.0).powf(-level_db / T::lit(20.0));
        let mut lo = i;
        while lo > 0 && p[lo - 1] >= thr {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < p.len() && p[hi + 1] >= thr {
            hi += 1;
        }
        if lo == 0 || hi + 1 == p.len() {
            return None;
        }
        let cross = |a: usize, b: usize| {
            let f = (p[a] - thr) / (p[a] - p[b]);
            self.ranges[a] + f * (self.ranges[b] - self.ranges[a])
        };
        Some(cross(hi, hi + 1) - cross(lo, lo - 1))
    }
}

/// Windowed, zero-padded FFT of the valid part of a subband record,
/// mapped to range with `r = c f / (2 l k)`.
///
/// The output covers the configured range window widened by one
/// resolution cell on each side. Magnitudes are divided by the window sum,
/// so a tone of amplitude `A` peaks near `A`.
pub fn range_profile<T: Real>(
    rec: &DechirpedRecord<T>,
    l: usize,
    cfg: &RadarConfig<T>,
    window: Window,
) -> Result<RangeProfile<T>> {
    if l == 0 || l > cfg.l_max {
        bail!(Receiver, "harmonic {l} outside 1..={}", cfg.l_max);
    }
    let x = rec.valid();
    if x.is_empty() {
        bail!(Receiver, "record has no valid samples");
    }
    let w: Vec<T> = window.coefficients(x.len());
    let wsum = w.iter().fold(T::zero(), |a, &b| a + b);
    let xw: Vec<Complex<T>> = x.iter().zip(&w).map(|(v, &g)| v * g).collect();
    let m = next_pow2(MIN_PAD * x.len());
    let spec = fft_padded(&xw, m);

    let lk = T::from_usize_lossy(l) * cfg.chirp_rate();
    let df = rec.sample_rate / T::from_usize_lossy(m);
    let to_range = c::<T>() / (T::lit(2.0) * lk);
    let cell = cfg.range_resolution(l);
    let lo = (cfg.range_window.0 - cell).max(T::zero());
    let hi = cfg.range_window.1 + cell;
    let (mut ranges, mut mags) = (Vec::new(), Vec::new());
    for (i, v) in spec.iter().enumerate().take(m / 2) {
        let r = T::from_usize_lossy(i) * df * to_range;
        if r >= lo && r <= hi {
            ranges.push(r);
            mags.push(v.norm() / wsum);
        }
    }
    if ranges.is_empty() {
        bail!(Receiver, "range window falls outside the de-chirp band");
    }
    RangeProfile::new(ranges, mags, format!("l={l}"))
}

/// Peaks separated by a valley at least `min_separation_db` below the
/// smaller of each pair, sorted by range. Uses [`DEFAULT_PEAK_FLOOR_DB`].
pub fn resolve_peaks<T: Real>(profile: &RangeProfile<T>, min_separation_db: T) -> Vec<Peak<T>> {
    resolve_peaks_with_floor(profile, min_separation_db, T::lit(DEFAULT_PEAK_FLOOR_DB))
}

/// As [`resolve_peaks`] with an explicit detection floor (dB relative to
/// the profile maximum, negative).
///
/// Local maxima are accepted greedily from the strongest down; a
/// candidate is dropped if the valley between it and any accepted peak is
/// shallower than `min_separation_db`.
pub fn resolve_peaks_with_floor<T: Real>(profile: &RangeProfile<T>, min_separation_db: T, floor_db: T) -> Vec<Peak<T>> {
    let p = &profile.magnitudes;
    let n = p.len();
    if n < 3 {
        return Vec::new();
    }
    let floor = profile.max_magnitude() * T::lit(10.0).powf(floor_db / T::lit(20.0));
    let mut cands: Vec<usize> = (1..n - 1).filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1] && p[i] >= floor).collect();
    cands.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(a.cmp(&b)));
    let ratio = T::lit(10.0).powf(min_separation_db / T::lit(20.0));
    let mut accepted: Vec<usize> = Vec::new();
    for &cand in &cands {
        let separated = accepted.iter().all(|&a| {
            let (lo, hi) = (a.min(cand), a.max(cand));
            let valley = p[lo..=hi].iter().copied().fold(T::infinity(), T::min);
            p[a].min(p[cand]) >= ratio * valley
        });
        if separated {
            accepted.push(cand);
        }
    }
    accepted.sort_unstable();
    accepted.into_iter().map(|i| Peak { range: profile.ranges[i], magnitude: p[i] }).collect()
}

/// Number of targets that own a peak: a peak counts for a target when it
/// lies closer than half the distance to the target's nearest neighbour.
/// The regions are disjoint, so no peak serves two targets, and sidelobes
/// or grating lobes away from the targets are ignored.
pub fn count_attributed<T: Real>(peaks: &[Peak<T>], targets: &[T]) -> usize {
    targets
        .iter()
        .enumerate()
        .filter(|&(i, &r)| {
            let half = targets
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &o)| (o - r).abs() * T::lit(0.5))
                .fold(T::infinity(), T::min);
            peaks.iter().any(|p| (p.range - r).abs() < half)
        })
        .count()
}
