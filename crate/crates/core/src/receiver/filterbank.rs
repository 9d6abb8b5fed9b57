use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{DechirpedRecord, RadarConfig};
use crate::error::{bail, Result};

/// Dictionary oversampling relative to the `1/T` record resolution.
const OVERSAMPLE: f64 = 4.0;
/// Dictionary margin beyond the nominal tone interval, in `1/T` bins.
const MARGIN_BINS: f64 = 0.5;
/// Relative singular-value cut for each band subspace.
const RANK_TOL: f64 = 1e-6;

/// Tone-dictionary subspace of one subband.
#[derive(Debug, Clone)]
struct BandBasis {
    l: usize,
    freqs: Vec<f64>,
    /// Left singular vectors over the fitted rows.
    u: DMatrix<Complex64>,
    /// `V_r Sigma_r^-1`: subspace coordinates to tone coefficients.
    to_tones: DMatrix<Complex64>,
    /// Tone synthesis over the whole record, `A_full V_r Sigma_r^-1`.
    synth: DMatrix<Complex64>,
}

/// Tone-domain description of one subband: `x_l(t) = sum_j c_j exp(j 2 pi f_j t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandTones {
    pub l: usize,
    pub freqs: Vec<f64>,
    pub coeffs: Vec<Complex64>,
}

impl BandTones {
    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.freqs
            .iter()
            .zip(&self.coeffs)
            .map(|(f, c)| c * Complex64::from_polar(1.0, std::f64::consts::TAU * f * t))
            .sum()
    }
}

/// Separates a composite de-chirped record into its harmonic subbands.
///
/// Each subband `l` only holds tones in `[l k tau_min, l k tau_max]`, which
/// spans a couple of `1/T` bins for a short range window. Guards between
/// subbands are then too narrow for a practical FIR, so the separation is
/// a joint least-squares fit onto the union of per-band tone subspaces.
#[derive(Debug, Clone)]
pub struct SubbandFilterBank {
    start: usize,
    len: usize,
    sample_rate: f64,
    bands: Vec<BandBasis>,
    /// Pseudo-inverse of the stacked band bases, coordinates from rows.
    pinv: DMatrix<Complex64>,
    offsets: Vec<usize>,
    condition: f64,
}

fn tone_matrix(times: &[f64], freqs: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(times.len(), freqs.len(), |i, j| {
        Complex64::from_polar(1.0, std::f64::consts::TAU * freqs[j] * times[i])
    })
}

fn record_times(cfg: &RadarConfig<f64>) -> Vec<f64> {
    (0..cfg.record_len()).map(|n| n as f64 / cfg.dechirp_sample_rate).collect()
}

impl BandBasis {
    fn new(cfg: &RadarConfig<f64>, l: usize, fit_t: &[f64], all_t: &[f64]) -> Self {
        let bin = 1.0 / cfg.lfm.duration;
        let (lo, hi) = cfg.tone_interval(l);
        let (lo, hi) = (lo - MARGIN_BINS * bin, hi + MARGIN_BINS * bin);
        let nf = ((hi - lo) / bin * OVERSAMPLE).ceil() as usize + 1;
        let freqs: Vec<f64> = (0..nf).map(|j| lo + (hi - lo) * j as f64 / (nf - 1) as f64).collect();
        let svd = tone_matrix(fit_t, &freqs).svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let smax = svd.singular_values.max();
        let keep: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > RANK_TOL * smax).collect();
        let u_r = u.select_columns(&keep);
        let v_r = vt.select_rows(&keep).adjoint();
        let inv_s = DMatrix::from_diagonal(&DVector::from_iterator(
            keep.len(),
            keep.iter().map(|&i| Complex64::new(1.0 / svd.singular_values[i], 0.0)),
        ));
        let to_tones = v_r * inv_s;
        let synth = tone_matrix(all_t, &freqs) * &to_tones;
        Self { l, freqs, u: u_r, to_tones, synth }
    }

    /// Orthogonal projection of the fitted rows onto this band alone.
    fn project(&self, rows: &[Complex64]) -> BandTones {
        let y = DVector::from_column_slice(rows);
        let coords = self.u.ad_mul(&y);
        BandTones { l: self.l, freqs: self.freqs.clone(), coeffs: (&self.to_tones * coords).iter().copied().collect() }
    }
}

/// Tone coefficients of an already separated subband-`l` record.
pub fn band_tones(slice: &DechirpedRecord<f64>, l: usize, cfg: &RadarConfig<f64>) -> Result<BandTones> {
    cfg.validate()?;
    if l == 0 || l > cfg.l_max {
        bail!(Receiver, "harmonic {l} outside 1..={}", cfg.l_max);
    }
    if slice.len() != cfg.record_len() {
        bail!(Receiver, "record has {} samples, configuration expects {}", slice.len(), cfg.record_len());
    }
    let all_t = record_times(cfg);
    let start = cfg.valid_from();
    let basis = BandBasis::new(cfg, l, &all_t[start..], &all_t);
    Ok(basis.project(&slice.samples[start..]))
}

impl SubbandFilterBank {
    pub fn new(cfg: &RadarConfig<f64>) -> Result<Self> {
        cfg.validate()?;
        let clashes = cfg.tone_clashes();
        if !clashes.is_empty() {
            let list: Vec<String> = clashes
                .iter()
                .map(|&(a, b)| {
                    let (_, hi) = cfg.tone_interval(a);
                    let (lo, _) = cfg.tone_interval(b);
                    format!("l={a} ends at {hi:.0} Hz, l={b} starts at {lo:.0} Hz")
                })
                .collect();
            bail!(
                Receiver,
                "subband tone intervals overlap for range window {:?} m: {}",
                cfg.range_window,
                list.join("; ")
            );
        }
        let len = cfg.record_len();
        let start = cfg.valid_from();
        if start >= len {
            bail!(Receiver, "no sample lies inside the full-overlap region");
        }
        let fs = cfg.dechirp_sample_rate;
        let all_t = record_times(cfg);
        let fit_t = &all_t[start..];

        let bands: Vec<BandBasis> = (1..=cfg.l_max).map(|l| BandBasis::new(cfg, l, fit_t, &all_t)).collect();

        let total: usize = bands.iter().map(|b| b.u.ncols()).sum();
        let mut stacked = DMatrix::<Complex64>::zeros(fit_t.len(), total);
        let mut offsets = Vec::with_capacity(bands.len());
        let mut off = 0;
        for b in &bands {
            stacked.columns_mut(off, b.u.ncols()).copy_from(&b.u);
            offsets.push(off);
            off += b.u.ncols();
        }
        let svd = stacked.svd(true, true);
        let s = &svd.singular_values;
        let condition = s.max() / s.min();
        if !condition.is_finite() || condition > 1e8 {
            bail!(Receiver, "subband subspaces are nearly dependent (condition {condition:.3e})");
        }
        let pinv = svd.pseudo_inverse(0.0).map_err(|e| crate::Error::Receiver(e.to_string()))?;
        Ok(Self { start, len, sample_rate: fs, bands, pinv, offsets, condition })
    }

    pub fn l_max(&self) -> usize {
        self.bands.len()
    }

    /// Condition number of the stacked subspace basis.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    fn check(&self, rec: &DechirpedRecord<f64>) -> Result<()> {
        if rec.len() != self.len {
            bail!(Receiver, "record has {} samples, filter bank expects {}", rec.len(), self.len);
        }
        if (rec.sample_rate - self.sample_rate).abs() > 1e-9 * self.sample_rate {
            bail!(
                Receiver,
                "record sample rate {} Hz differs from the bank's {} Hz",
                rec.sample_rate,
                self.sample_rate
            );
        }
        Ok(())
    }

    fn band_index(&self, l: usize) -> Result<usize> {
        if l == 0 || l > self.bands.len() {
            bail!(Receiver, "harmonic {l} outside 1..={}", self.bands.len());
        }
        Ok(l - 1)
    }

    fn coordinates(&self, rec: &DechirpedRecord<f64>) -> Result<DVector<Complex64>> {
        self.check(rec)?;
        let y = DVector::from_column_slice(&rec.samples[self.start..]);
        Ok(&self.pinv * y)
    }

    fn band_coords(&self, coords: &DVector<Complex64>, i: usize) -> DVector<Complex64> {
        coords.rows(self.offsets[i], self.bands[i].u.ncols()).into_owned()
    }

    /// Tone coefficients of every subband.
    pub fn tones(&self, rec: &DechirpedRecord<f64>) -> Result<Vec<BandTones>> {
        let coords = self.coordinates(rec)?;
        Ok(self
            .bands
            .iter()
            .enumerate()
            .map(|(i, b)| BandTones {
                l: b.l,
                freqs: b.freqs.clone(),
                coeffs: (&b.to_tones * self.band_coords(&coords, i)).iter().copied().collect(),
            })
            .collect())
    }

    fn component(&self, rec: &DechirpedRecord<f64>, coords: &DVector<Complex64>, i: usize) -> DechirpedRecord<f64> {
        let x = &self.bands[i].synth * self.band_coords(coords, i);
        DechirpedRecord { samples: x.iter().copied().collect(), band: Some(self.bands[i].l), ..rec.clone() }
    }

    /// Subband `l` of `rec`, evaluated over the whole record.
    pub fn extract(&self, rec: &DechirpedRecord<f64>, l: usize) -> Result<DechirpedRecord<f64>> {
        let i = self.band_index(l)?;
        let coords = self.coordinates(rec)?;
        Ok(self.component(rec, &coords, i))
    }

    /// All subbands, `l = 1..=l_max`.
    pub fn split(&self, rec: &DechirpedRecord<f64>) -> Result<Vec<DechirpedRecord<f64>>> {
        let coords = self.coordinates(rec)?;
        Ok((0..self.bands.len()).map(|i| self.component(rec, &coords, i)).collect())
    }
}

/// One-shot subband separation. Builds a [`SubbandFilterBank`]; reuse a
/// bank when processing many pulses.
pub fn subband_extract(rec: &DechirpedRecord<f64>, l: usize, cfg: &RadarConfig<f64>) -> Result<DechirpedRecord<f64>> {
    SubbandFilterBank::new(cfg)?.extract(rec, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receiver::{dechirp_synthesize, synthesize_echoes};
    use crate::scene::{Echo, PointScatterer, Scene};

    const C: f64 = crate::SPEED_OF_LIGHT;

    fn parts(echoes: &[Echo<f64>]) -> Vec<Vec<Complex64>> {
        let base = RadarConfig::<f64>::standard();
        let mut prev = vec![Complex64::new(0.0, 0.0); base.record_len()];
        (1..=4)
            .map(|l| {
                let cfg = RadarConfig { l_max: l, ..base.clone() };
                let cur = synthesize_echoes(echoes, &cfg).unwrap();
                let part = cur.iter().zip(&prev).map(|(a, b)| a - b).collect();
                prev = cur;
                part
            })
            .collect()
    }

    fn max_rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let peak = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / peak
    }

    #[test]
    fn separates_two_targets_fifteen_cm_apart() {
        let cfg = RadarConfig::<f64>::standard();
        let scene = Scene::fixed(vec![
            PointScatterer::at_range(1.925, 1.0).unwrap(),
            PointScatterer::at_range(2.075, 1.0).unwrap(),
        ])
        .unwrap();
        let rec = dechirp_synthesize(&scene, &cfg, 0).unwrap();
        let truth = parts(&scene.scatterers_at(0.0));
        let bank = SubbandFilterBank::new(&cfg).unwrap();
        let bands = bank.split(&rec).unwrap();
        for (l, (b, t)) in bands.iter().zip(&truth).enumerate() {
            assert_eq!(b.band, Some(l + 1));
            let e = max_rel_err(&b.samples, t);
            assert!(20.0 * e.log10() < -60.0, "l={}: residual {} dB", l + 1, 20.0 * e.log10());
        }
    }

    #[test]
    fn bands_sum_back_to_the_record() {
        let cfg = RadarConfig::<f64>::standard();
        let echoes: Vec<Echo<f64>> = [1.93, 2.0, 2.08]
            .iter()
            .zip([1.0, 0.6, 0.8])
            .map(|(r, a)| Echo { delay: 2.0 * r / C, amplitude: a })
            .collect();
        let x = synthesize_echoes(&echoes, &cfg).unwrap();
        let rec = DechirpedRecord {
            samples: x.clone(),
            sample_rate: 20e6,
            pulse_index: 0,
            t_slow: 0.0,
            valid_from: 1,
            band: None,
        };
        let bands = SubbandFilterBank::new(&cfg).unwrap().split(&rec).unwrap();
        let sum: Vec<Complex64> = (0..x.len()).map(|n| bands.iter().map(|b| b.samples[n]).sum()).collect();
        for (s, v) in sum.iter().zip(&x).skip(1) {
            let db = 20.0 * (s.norm() / v.norm()).log10();
            assert!(db.abs() < 0.1, "in-band ripple {db} dB");
        }
    }

    #[test]
    fn out_of_range_harmonic() {
        let cfg = RadarConfig::<f64>::standard();
        let rec = DechirpedRecord {
            samples: vec![Complex64::new(0.0, 0.0); 2000],
            sample_rate: 20e6,
            pulse_index: 0,
            t_slow: 0.0,
            valid_from: 1,
            band: None,
        };
        assert!(subband_extract(&rec, 0, &cfg).is_err());
        assert!(subband_extract(&rec, 5, &cfg).is_err());
    }

    #[test]
    fn overlapping_window_is_reported() {
        let mut cfg = RadarConfig::<f64>::standard();
        cfg.range_window = (1.0, 5.0);
        let err = SubbandFilterBank::new(&cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("l=1") && msg.contains("l=2") && msg.contains("l=4"), "{msg}");
    }

    #[test]
    fn tones_reproduce_the_band() {
        let cfg = RadarConfig::<f64>::standard();
        let echoes = [Echo { delay: 2.0 * 2.02 / C, amplitude: 1.0 }];
        let x = synthesize_echoes(&echoes, &cfg).unwrap();
        let rec =
            DechirpedRecord { samples: x, sample_rate: 20e6, pulse_index: 0, t_slow: 0.0, valid_from: 1, band: None };
        let bank = SubbandFilterBank::new(&cfg).unwrap();
        let tones = bank.tones(&rec).unwrap();
        let b3 = bank.extract(&rec, 3).unwrap();
        for n in [1, 500, 1999] {
            assert!((tones[2].evaluate(n as f64 / 20e6) - b3.samples[n]).norm() < 1e-9);
        }
        assert!(bank.condition() < 1e4);
    }
}
