use num_complex::Complex64;

use super::{GappedSpectrum, PoleModel};
use crate::dsp::{ifft_padded, next_pow2, Window};
use crate::error::{bail, Result};
use crate::receiver::RangeProfile;
use crate::scalar::SPEED_OF_LIGHT;

/// All-pole fits above this relative residual are not trusted for gap
/// filling.
pub const DEFAULT_RESIDUAL_GATE: f64 = 0.1;
/// Delay-domain oversampling of fused profiles.
pub const FUSED_PAD: usize = 16;

/// Weights for [`fuse_direct`]: rect over every measured bin, or one
/// tapered window per measured run.
pub(crate) fn direct_weights(g: &GappedSpectrum, window: Window) -> Vec<f64> {
    let mut w = vec![0.0; g.len()];
    for run in g.runs() {
        let c: Vec<f64> = window.coefficients(run.len());
        w[run].copy_from_slice(&c);
    }
    w
}

/// Unnormalized delay-domain line, `FUSED_PAD`x oversampled, scaled so a
/// unit scatterer peaks at 1.
pub(crate) fn range_line(values: &[Complex64], weights: &[f64]) -> Vec<Complex64> {
    let wsum: f64 = weights.iter().sum();
    let x: Vec<Complex64> = values.iter().zip(weights).map(|(v, w)| v * *w).collect();
    let m = next_pow2(FUSED_PAD * values.len());
    let scale = if wsum > 0.0 { 1.0 / wsum } else { 0.0 };
    ifft_padded(&x, m).into_iter().map(|v| v * scale).collect()
}

/// Range cell of a line of length `m` at grid spacing `delta_f`.
pub(crate) fn range_step(m: usize, delta_f: f64) -> f64 {
    0.5 * SPEED_OF_LIGHT / (m as f64 * delta_f)
}

fn to_profile(line: &[Complex64], delta_f: f64, label: &str) -> Result<RangeProfile<f64>> {
    let dr = range_step(line.len(), delta_f);
    RangeProfile::new((0..line.len()).map(|i| i as f64 * dr).collect(), line.iter().map(|v| v.norm()).collect(), label)
}

/// Zero-filled inverse DFT of the gapped spectrum over the full
/// unambiguous range `c / (2 delta_f)`.
///
/// The mainlobe is set by the total span; the periodic gaps leave
/// grating-like sidelobes.
pub fn fuse_direct(g: &GappedSpectrum, window: Window) -> Result<RangeProfile<f64>> {
    if !g.mask.iter().any(|&m| m) {
        bail!(Fusion, "spectrum has no measured bins");
    }
    let w = direct_weights(g, window);
    to_profile(&range_line(&g.values, &w), g.delta_f, "fused-direct")
}

/// Measured bins kept verbatim, gaps filled from `model`.
pub fn filled_spectrum(g: &GappedSpectrum, model: &PoleModel) -> Vec<Complex64> {
    (0..g.len()).map(|i| if g.mask[i] { g.values[i] } else { model.evaluate(g.freq(i)) }).collect()
}

/// Fused profile with gaps filled by the all-pole model and one window
/// over the whole span.
pub fn gap_fill_profile(g: &GappedSpectrum, model: &PoleModel, window: Window, gate: f64) -> Result<RangeProfile<f64>> {
    if model.is_empty() {
        bail!(Fusion, "empty pole model cannot fill gaps; use the direct fused profile");
    }
    if !(model.fit_residual <= gate) {
        bail!(
            Fusion,
            "pole model residual {:.3e} exceeds the gate {gate}; use the direct fused profile instead",
            model.fit_residual
        );
    }
    let w: Vec<f64> = window.coefficients(g.len());
    to_profile(&range_line(&filled_spectrum(g, model), &w), g.delta_f, "fused-allpole")
}
