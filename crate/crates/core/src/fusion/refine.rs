use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::pencil::{model_matrix, PoleModel, MAX_CONDITION};
use super::GappedSpectrum;
use crate::error::{bail, Result};

pub const DEFAULT_MAX_ITERS: usize = 50;
const REL_TOL: f64 = 1e-8;
const MAX_REJECTS: usize = 5;

struct Problem {
    freqs: Vec<f64>,
    y: DVector<Complex64>,
    ynorm2: f64,
}

struct Eval {
    cost: f64,
    amps: DVector<Complex64>,
    resid: DVector<Complex64>,
    /// Orthonormal basis of the model column space.
    q: DMatrix<Complex64>,
    a: DMatrix<Complex64>,
}

impl Problem {
    fn eval(&self, delays: &[f64]) -> Result<Eval> {
        let a = model_matrix(&self.freqs, delays);
        let qr = a.clone().qr();
        let r = qr.r();
        let diag: Vec<f64> = r.diagonal().iter().map(|v| v.norm()).collect();
        let dmax = diag.iter().copied().fold(0.0, f64::max);
        let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if !(dmin > 0.0) || dmax / dmin > MAX_CONDITION {
            bail!(Fusion, "delays collapsed during refinement");
        }
        let q = qr.q();
        let qy = q.ad_mul(&self.y);
        let amps = r.solve_upper_triangular(&qy).expect("checked nonsingular");
        let resid = &self.y - &q * qy;
        Ok(Eval { cost: resid.norm_squared(), amps, resid, q, a })
    }

    /// Real Jacobian of the projected residual, Kaufman form
    /// `J_k = -P_perp dA/dtau_k a`, stacked as `[Re; Im]`.
    fn jacobian(&self, e: &Eval) -> DMatrix<f64> {
        let (n, k) = e.a.shape();
        let mut j = DMatrix::<f64>::zeros(2 * n, k);
        for c in 0..k {
            let d = DVector::from_fn(n, |i, _| Complex64::new(0.0, -TAU * self.freqs[i]) * e.a[(i, c)] * e.amps[c]);
            let pd = &d - &e.q * e.q.ad_mul(&d);
            for i in 0..n {
                j[(i, c)] = -pd[i].re;
                j[(n + i, c)] = -pd[i].im;
            }
        }
        j
    }
}

fn model_from(delays: Vec<f64>, e: &Eval, ynorm2: f64, degraded: bool) -> PoleModel {
    let mut pairs: Vec<(f64, Complex64)> = delays.into_iter().zip(e.amps.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let res = if ynorm2 > 0.0 { (e.cost / ynorm2).sqrt() } else { 0.0 };
    PoleModel {
        order: pairs.len(),
        delays: pairs.iter().map(|p| p.0).collect(),
        amplitudes: pairs.iter().map(|p| p.1).collect(),
        fit_residual: res,
        degraded,
    }
}

/// Variable-projection Levenberg-Marquardt refinement of the delays
/// against every measured bin of `g`; amplitudes are re-solved linearly
/// at each step.
///
/// A step is accepted when the cost does not increase. If the first
/// [`MAX_REJECTS`] damped steps all fail while the gradient is not
/// negligible, `init` is returned with `degraded` set.
pub fn refine_global(g: &GappedSpectrum, init: &PoleModel, max_iters: usize) -> Result<PoleModel> {
    if init.is_empty() {
        bail!(Fusion, "refinement needs a nonempty initial model");
    }
    let idx = g.occupied();
    let prob = Problem {
        freqs: idx.iter().map(|&i| g.freq(i)).collect(),
        y: DVector::from_iterator(idx.len(), idx.iter().map(|&i| g.values[i])),
        ynorm2: 0.0,
    };
    let prob = Problem { ynorm2: prob.y.norm_squared(), ..prob };
    if idx.len() < 2 * init.order {
        bail!(Fusion, "{} measured bins cannot support order {}", idx.len(), init.order);
    }

    let mut delays = init.delays.clone();
    let mut cur = prob.eval(&delays)?;
    let mut lambda = 1e-3;
    let mut accepted_any = false;
    let mut rejects = 0;
    for _ in 0..max_iters {
        let j = prob.jacobian(&cur);
        let r = DVector::from_iterator(
            2 * cur.resid.len(),
            cur.resid.iter().map(|v| v.re).chain(cur.resid.iter().map(|v| v.im)),
        );
        let jtj = j.tr_mul(&j);
        let grad = j.tr_mul(&r);
        let gnorm = grad.norm();
        let scale = (jtj.diagonal().max() * cur.cost).sqrt();
        if !(gnorm > 1e-12 * scale) {
            break;
        }
        let mut lhs = jtj.clone();
        for d in 0..lhs.nrows() {
            lhs[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
        }
        let step = match lhs.cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                lambda *= 10.0;
                rejects += 1;
                if rejects >= MAX_REJECTS && !accepted_any {
                    let e = prob.eval(&init.delays)?;
                    return Ok(model_from(init.delays.clone(), &e, prob.ynorm2, true));
                }
                continue;
            }
        };
        let trial: Vec<f64> = delays.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
        let next = prob.eval(&trial).ok().filter(|e| e.cost <= cur.cost);
        match next {
            Some(e) => {
                let rel = (cur.cost - e.cost) / cur.cost.max(f64::MIN_POSITIVE);
                delays = trial;
                cur = e;
                accepted_any = true;
                rejects = 0;
                lambda = (lambda / 3.0).max(1e-12);
                if rel < REL_TOL {
                    break;
                }
            }
            None => {
                lambda *= 10.0;
                rejects += 1;
                if rejects >= MAX_REJECTS {
                    if !accepted_any {
                        let e = prob.eval(&init.delays)?;
                        return Ok(model_from(init.delays.clone(), &e, prob.ynorm2, true));
                    }
                    break;
                }
            }
        }
    }
    Ok(model_from(delays, &cur, prob.ynorm2, false))
}
