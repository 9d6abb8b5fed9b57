use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::BandSegment;
use crate::error::{bail, Result};

/// Relative tolerance for two segments claiming the same bin.
const MERGE_TOL: f64 = 1e-6;

/// Target response on one global grid with measured bins flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GappedSpectrum {
    pub f_min: f64,
    pub delta_f: f64,
    pub values: Vec<Complex64>,
    pub mask: Vec<bool>,
}

impl GappedSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn freq(&self, i: usize) -> f64 {
        self.f_min + i as f64 * self.delta_f
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.freq(i)).collect()
    }

    pub fn f_max(&self) -> f64 {
        self.freq(self.len().saturating_sub(1))
    }

    pub fn occupied(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn occupancy(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.mask.iter().filter(|&&m| m).count() as f64 / self.len() as f64
    }

    /// Contiguous measured runs as `start..end` index ranges.
    pub fn runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.len() {
            if self.mask[i] {
                let s = i;
                while i < self.len() && self.mask[i] {
                    i += 1;
                }
                out.push(s..i);
            } else {
                i += 1;
            }
        }
        out
    }

    /// Longest measured run; the first one on ties.
    pub fn longest_run(&self) -> Option<std::ops::Range<usize>> {
        self.runs().into_iter().rev().max_by_key(|r| r.len())
    }
}

/// Places segments on one grid spanning the lowest to the highest nominal
/// band edge.
pub fn assemble_gapped(segments: &[BandSegment]) -> Result<GappedSpectrum> {
    let Some(first) = segments.first() else {
        bail!(Fusion, "no segments to assemble");
    };
    for s in segments {
        s.validate()?;
    }
    let df = first.delta_f;
    if segments.iter().any(|s| (s.delta_f - df).abs() > 1e-9 * df) {
        bail!(Fusion, "segments use different grid spacings");
    }
    let lo = segments
        .iter()
        .map(|s| s.nominal.0.min(s.freqs.first().copied().unwrap_or(s.nominal.0)))
        .fold(f64::INFINITY, f64::min);
    let hi = segments
        .iter()
        .map(|s| s.nominal.1.max(s.freqs.last().copied().unwrap_or(s.nominal.1)))
        .fold(f64::NEG_INFINITY, f64::max);
    // snap the lower edge onto the common grid
    let origin = first.grid_origin;
    let f_min = origin + ((lo - origin) / df + 1e-9).floor() * df;
    let n = ((hi - f_min) / df + 1e-9).floor() as usize + 1;
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    let mut mask = vec![false; n];
    for s in segments {
        for (&f, &v) in s.freqs.iter().zip(&s.values) {
            let x = (f - f_min) / df;
            let i = x.round();
            if (x - i).abs() > 1e-6 || i < 0.0 || i as usize >= n {
                bail!(Fusion, "segment l={} frequency {f} Hz is off the common grid", s.l);
            }
            let i = i as usize;
            if mask[i] {
                let scale = values[i].norm().max(v.norm());
                if (values[i] - v).norm() > MERGE_TOL * scale {
                    bail!(Fusion, "segments disagree at {f} Hz");
                }
            } else {
                values[i] = v;
                mask[i] = true;
            }
        }
    }
    Ok(GappedSpectrum { f_min, delta_f: df, values, mask })
}
