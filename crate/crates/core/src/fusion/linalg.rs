//! Dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Result};

/// Leading left singular vectors and singular values (descending).
pub(crate) struct Truncated {
    pub u: DMatrix<Complex64>,
    pub s: Vec<f64>,
}

/// Full SVD below this many matrix entries.
const DENSE_LIMIT: usize = 60_000;
const POWER_ITERS: usize = 2;
const SKETCH_SEED: u64 = 0x006d_6272_6164_6172;

fn sorted(u: DMatrix<Complex64>, s: &DVector<f64>, keep: usize) -> Truncated {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    idx.truncate(keep);
    Truncated { u: u.select_columns(&idx), s: idx.iter().map(|&i| s[i]).collect() }
}

/// `rank` leading singular triplets (left side only). Large matrices use
/// a seeded randomized range finder with power iterations.
pub(crate) fn truncated_svd(y: &DMatrix<Complex64>, rank: usize) -> Truncated {
    let (m, n) = y.shape();
    let full = m.min(n);
    let rank = rank.min(full);
    if m * n <= DENSE_LIMIT || 2 * rank >= full {
        let svd = y.clone().svd(true, false);
        return sorted(svd.u.expect("u requested"), &svd.singular_values, rank);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SKETCH_SEED);
    let omega = DMatrix::from_fn(n, rank, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let mut q = (y * omega).qr().q();
    for _ in 0..POWER_ITERS {
        let z = y.ad_mul(&q);
        q = (y * z).qr().q();
    }
    let b = q.ad_mul(y);
    let svd = b.svd(true, false);
    let u = q * svd.u.expect("u requested");
    sorted(u, &svd.singular_values, rank)
}

/// Eigenvalues of a small complex matrix from its Schur form.
pub(crate) fn eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let Some(schur) = m.try_schur(1e-14, 10_000) else {
        bail!(Fusion, "pencil eigenproblem did not converge");
    };
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Least-squares solution with its condition number.
pub(crate) fn lstsq(a: &DMatrix<Complex64>, y: &DVector<Complex64>) -> Result<(DVector<Complex64>, f64)> {
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let smin = s.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let x = svd.solve(y, 0.0).map_err(|e| crate::Error::Fusion(e.to_string()))?;
    Ok((x, cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn randomized_matches_dense_on_low_rank() {
        let (m, n) = (400, 300);
        let a = DMatrix::from_fn(m, 3, |i, j| Complex64::from_polar(1.0, 0.01 * (i * (j + 1)) as f64));
        let b = DMatrix::from_fn(3, n, |i, j| Complex64::from_polar(1.0 + i as f64, 0.02 * (j * (i + 2)) as f64));
        let y = a * b;
        let t = truncated_svd(&y, 8);
        let d = y.clone().svd(false, false).singular_values;
        let mut d: Vec<f64> = d.iter().copied().collect();
        d.sort_by(|a, b| b.total_cmp(a));
        for i in 0..3 {
            assert!((t.s[i] - d[i]).abs() < 1e-9 * d[0]);
        }
        assert!(t.s[3] < 1e-10 * d[0]);
    }

    #[test]
    fn eigenvalues_of_similarity_transform() {
        let d = [Complex64::from_polar(1.0, 0.3), Complex64::from_polar(1.0, -1.1), Complex64::from_polar(0.9, 2.0)];
        let t = DMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(2.0, 0.5),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.3, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(1.5, 0.2),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.7, 0.0),
                Complex64::new(0.2, 0.9),
                Complex64::new(-1.2, 0.4),
            ],
        );
        let m = &t * DMatrix::from_diagonal(&DVector::from_column_slice(&d)) * t.clone().try_inverse().unwrap();
        let mut e = eigenvalues(m).unwrap();
        for z in d {
            let (i, _) = e.iter().enumerate().min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm())).unwrap();
            assert!((e[i] - z).norm() < 1e-10);
            e.remove(i);
        }
    }
}
