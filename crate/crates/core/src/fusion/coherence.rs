use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BandSegment, GappedSpectrum};
use crate::error::{bail, Result};

/// Best single complex scale between measured bins and a reference
/// response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalFit {
    pub constant: Complex64,
    /// `max |g - c h| / max |h|` over measured bins.
    pub max_rel_error: f64,
}

/// Least-squares constant `c` minimizing `||g - c h||` over measured bins.
/// `reference` is indexed like `g.values`.
pub fn fit_global_constant(g: &GappedSpectrum, reference: &[Complex64]) -> Result<GlobalFit> {
    if reference.len() != g.len() {
        bail!(Fusion, "reference has {} bins, spectrum has {}", reference.len(), g.len());
    }
    let idx = g.occupied();
    let num: Complex64 = idx.iter().map(|&i| reference[i].conj() * g.values[i]).sum();
    let den: f64 = idx.iter().map(|&i| reference[i].norm_sqr()).sum();
    if !(den > 0.0) {
        bail!(Fusion, "reference response vanishes on the measured bins");
    }
    let c = num / den;
    let peak = idx.iter().map(|&i| reference[i].norm()).fold(0.0, f64::max);
    let err = idx.iter().map(|&i| (g.values[i] - c * reference[i]).norm()).fold(0.0, f64::max);
    Ok(GlobalFit { constant: c, max_rel_error: err / peak })
}

/// Rotates each segment by an independent uniform random phase. Test mode
/// for demonstrating the cost of lost inter-band coherence; returns the
/// applied phases.
pub fn inject_band_phases(segments: &mut [BandSegment], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    segments
        .iter_mut()
        .map(|s| {
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let rot = Complex64::from_polar(1.0, phi);
            s.values.iter_mut().for_each(|v| *v *= rot);
            phi
        })
        .collect()
}
