use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg::{eigenvalues, lstsq, truncated_svd};
use super::GappedSpectrum;
use crate::error::{bail, Result};
use crate::scalar::SPEED_OF_LIGHT;

/// Least-squares problems above this condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Extra sketch columns beyond `max_order` in the truncated SVD.
const SKETCH_OVERSAMPLE: usize = 10;

/// `H(f) = sum a_i exp(-j 2 pi f tau_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleModel {
    pub delays: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub order: usize,
    /// `||y - model|| / ||y||` over measured bins.
    pub fit_residual: f64,
    /// Set when refinement could not make progress.
    #[serde(default)]
    pub degraded: bool,
}

impl PoleModel {
    pub fn empty() -> Self {
        Self { delays: vec![], amplitudes: vec![], order: 0, fit_residual: 1.0, degraded: false }
    }

    pub fn is_empty(&self) -> bool {
        self.order == 0
    }

    pub fn ranges(&self) -> Vec<f64> {
        self.delays.iter().map(|t| 0.5 * SPEED_OF_LIGHT * t).collect()
    }

    pub fn evaluate(&self, f: f64) -> Complex64 {
        self.delays.iter().zip(&self.amplitudes).map(|(&t, &a)| a * Complex64::from_polar(1.0, -TAU * f * t)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PencilOptions {
    pub max_order: usize,
    /// Singular values above `sv_threshold * sigma_max` count toward the order.
    pub sv_threshold: f64,
    /// Delays are unwrapped into, and restricted to, this window (s).
    pub delay_window: (f64, f64),
}

impl PencilOptions {
    pub fn new(max_order: usize, sv_threshold: f64, range_window: (f64, f64)) -> Self {
        let k = 2.0 / SPEED_OF_LIGHT;
        Self { max_order, sv_threshold, delay_window: (k * range_window.0, k * range_window.1) }
    }
}

/// Model matrix `A[n, i] = exp(-j 2 pi f_n tau_i)`.
pub(crate) fn model_matrix(freqs: &[f64], delays: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(freqs.len(), delays.len(), |n, i| Complex64::from_polar(1.0, -TAU * freqs[n] * delays[i]))
}

/// Amplitudes and relative residual for fixed delays, over measured bins.
pub fn fit_amplitudes(g: &GappedSpectrum, delays: &[f64]) -> Result<(Vec<Complex64>, f64)> {
    let idx = g.occupied();
    let freqs: Vec<f64> = idx.iter().map(|&i| g.freq(i)).collect();
    let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| g.values[i]));
    let ynorm = y.norm();
    if delays.is_empty() {
        return Ok((vec![], if ynorm > 0.0 { 1.0 } else { 0.0 }));
    }
    let a = model_matrix(&freqs, delays);
    let (x, cond) = lstsq(&a, &y)?;
    if !(cond <= MAX_CONDITION) {
        bail!(
            Fusion,
            "amplitude fit is ill-conditioned (condition {cond:.3e}); delays too close for the measured band"
        );
    }
    let r = (&y - &a * &x).norm();
    let res = if ynorm > 0.0 { r / ynorm } else { 0.0 };
    Ok((x.iter().copied().collect(), res))
}

/// Matrix-pencil pole estimate on the longest measured run of `g`.
///
/// The Hankel matrix of that run is `(N - P) x (P + 1)` with `P = N / 3`;
/// its singular values set the model order, the shift-invariance of the
/// leading left singular vectors gives the poles
/// `z_i = exp(-j 2 pi delta_f tau_i)`. Amplitudes come from a least-squares
/// fit against every measured bin.
pub fn estimate_poles(g: &GappedSpectrum, opts: &PencilOptions) -> Result<PoleModel> {
    let Some(run) = g.longest_run() else {
        bail!(Fusion, "spectrum has no measured bins");
    };
    let n = run.len();
    if opts.max_order == 0 {
        bail!(Fusion, "max_order must be >= 1");
    }
    if n < 2 * opts.max_order + 2 {
        bail!(
            Fusion,
            "longest measured run has {n} bins, need {} for order {}",
            2 * opts.max_order + 2,
            opts.max_order
        );
    }
    if !(opts.sv_threshold > 0.0 && opts.sv_threshold < 1.0) {
        bail!(Fusion, "sv_threshold must lie in (0, 1)");
    }
    let y = &g.values[run.clone()];
    let p = n / 3;
    let rows = n - p;
    let hankel = DMatrix::from_fn(rows, p + 1, |i, j| y[i + j]);
    let t = truncated_svd(&hankel, opts.max_order + SKETCH_OVERSAMPLE);
    let smax = t.s.first().copied().unwrap_or(0.0);
    if !(smax > 0.0) {
        return Ok(PoleModel { fit_residual: 0.0, ..PoleModel::empty() });
    }
    let order = t.s.iter().filter(|&&s| s > opts.sv_threshold * smax).count().min(opts.max_order).min(p);
    if order == 0 {
        return Ok(PoleModel::empty());
    }
    let u = t.u.columns(0, order);
    let u1 = u.rows(0, rows - 1).into_owned();
    let u2 = u.rows(1, rows - 1).into_owned();
    let pencil = u1.pseudo_inverse(0.0).map_err(|e| crate::Error::Fusion(e.to_string()))? * u2;
    let poles = eigenvalues(pencil)?;

    let period = 1.0 / g.delta_f;
    let (lo, hi) = opts.delay_window;
    let mut delays: Vec<f64> = poles
        .iter()
        .filter_map(|z| {
            let base = (-z.arg() / (TAU * g.delta_f)).rem_euclid(period);
            // smallest alias at or above the window start
            let k = ((lo - base) / period).ceil();
            let tau = base + k * period;
            (tau <= hi).then_some(tau)
        })
        .collect();
    delays.sort_by(f64::total_cmp);
    if delays.is_empty() {
        return Ok(PoleModel::empty());
    }
    let (amplitudes, fit_residual) = fit_amplitudes(g, &delays)?;
    Ok(PoleModel { order: delays.len(), delays, amplitudes, fit_residual, degraded: false })
}
