//! Point-scatterer world model: static placements or a rotating platform,
//! plus seeded white-noise injection.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::scalar::{c, Real};
use crate::waveform::SampledSignal;

/// A point target in the radar plane. Radar at the origin, boresight `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer<T> {
    pub x: T,
    pub y: T,
    pub reflectivity: T,
}

impl<T: Real> PointScatterer<T> {
    pub fn new(x: T, y: T, reflectivity: T) -> Result<Self> {
        let s = Self { x, y, reflectivity };
        s.validate()?;
        Ok(s)
    }

    /// Target on boresight at range `r`.
    pub fn at_range(r: T, reflectivity: T) -> Result<Self> {
        Self::new(r, T::zero(), reflectivity)
    }

    pub fn range(&self) -> T {
        self.x.hypot(self.y)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            bail!(Scene, "non-finite scatterer position");
        }
        if !self.reflectivity.is_finite() || self.reflectivity < T::zero() {
            bail!(Scene, "reflectivity must be finite and >= 0, got {}", self.reflectivity);
        }
        if self.range() <= T::zero() {
            bail!(Scene, "scatterer sits on the radar");
        }
        Ok(())
    }
}

/// Rim scatterers on a turntable centered at `(center_range, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotatingPlatform<T> {
    pub center_range: T,
    pub radius: T,
    /// rad/s, counter-clockwise positive.
    pub angular_rate: T,
    pub scatterer_angles: Vec<T>,
    pub reflectivities: Vec<T>,
}

impl<T: Real> RotatingPlatform<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_range.is_finite() && self.radius.is_finite() && self.angular_rate.is_finite()) {
            bail!(Scene, "non-finite platform parameter");
        }
        if self.radius < T::zero() {
            bail!(Scene, "platform radius must be >= 0");
        }
        if self.center_range <= self.radius {
            bail!(Scene, "platform must not enclose the radar");
        }
        if self.scatterer_angles.len() != self.reflectivities.len() {
            bail!(Scene, "{} angles but {} reflectivities", self.scatterer_angles.len(), self.reflectivities.len());
        }
        if self.reflectivities.iter().any(|a| !a.is_finite() || *a < T::zero()) {
            bail!(Scene, "reflectivity must be finite and >= 0");
        }
        if self.scatterer_angles.iter().any(|a| !a.is_finite()) {
            bail!(Scene, "non-finite scatterer angle");
        }
        Ok(())
    }

    /// Rim positions at slow time `t`.
    pub fn positions_at(&self, t: T) -> Vec<PointScatterer<T>> {
        self.scatterer_angles
            .iter()
            .zip(&self.reflectivities)
            .map(|(&a, &refl)| {
                let (s, co) = (a + self.angular_rate * t).sin_cos();
                PointScatterer { x: self.center_range + self.radius * co, y: self.radius * s, reflectivity: refl }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets<T> {
    Static(Vec<PointScatterer<T>>),
    Rotating(RotatingPlatform<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene<T> {
    pub targets: Targets<T>,
    /// Per-sample SNR of the received record; `None` disables noise.
    pub noise_snr_db: Option<T>,
    pub rng_seed: u64,
    /// Scale echo amplitudes by `(R_ref / R)^2`, `R_ref` being the first
    /// scatterer's range at `t = 0`. Off by default.
    pub range_decay: bool,
}

/// One echo: round-trip delay and amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Echo<T> {
    pub delay: T,
    pub amplitude: T,
}

impl<T: Real> Scene<T> {
    pub fn new(targets: Targets<T>, noise_snr_db: Option<T>, rng_seed: u64) -> Result<Self> {
        let s = Self { targets, noise_snr_db, rng_seed, range_decay: false };
        s.validate()?;
        Ok(s)
    }

    pub fn fixed(scatterers: Vec<PointScatterer<T>>) -> Result<Self> {
        Self::new(Targets::Static(scatterers), None, 0)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.targets {
            Targets::Static(v) => {
                if v.is_empty() {
                    bail!(Scene, "scene has no scatterers");
                }
                v.iter().try_for_each(|s| s.validate())?;
            }
            Targets::Rotating(p) => {
                p.validate()?;
                if p.scatterer_angles.is_empty() {
                    bail!(Scene, "scene has no scatterers");
                }
            }
        }
        if let Some(snr) = self.noise_snr_db {
            if snr.is_nan() {
                bail!(Scene, "SNR is NaN");
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        match &self.targets {
            Targets::Static(v) => v.len(),
            Targets::Rotating(p) => p.scatterer_angles.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scatterer positions at slow time `t_slow`.
    pub fn positions_at(&self, t_slow: T) -> Vec<PointScatterer<T>> {
        match &self.targets {
            Targets::Static(v) => v.clone(),
            Targets::Rotating(p) => p.positions_at(t_slow),
        }
    }

    /// Stop-and-hop echoes at slow time `t_slow`: delay `2R/c`, amplitude
    /// equal to the reflectivity.
    pub fn scatterers_at(&self, t_slow: T) -> Vec<Echo<T>> {
        let two_over_c = T::lit(2.0) / c::<T>();
        let pos = self.positions_at(t_slow);
        let r_ref = self.positions_at(T::zero())[0].range();
        pos.iter()
            .map(|p| {
                let r = p.range();
                let amplitude = if self.range_decay { p.reflectivity * (r_ref / r).powi(2) } else { p.reflectivity };
                Echo { delay: two_over_c * r, amplitude }
            })
            .collect()
    }

    /// Smallest and largest range over one platform revolution (or the
    /// static extent).
    pub fn range_extent(&self) -> (T, T) {
        match &self.targets {
            Targets::Static(v) => {
                v.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), s| (lo.min(s.range()), hi.max(s.range())))
            }
            Targets::Rotating(p) => (p.center_range - p.radius, p.center_range + p.radius),
        }
    }
}

/// SplitMix64 step; derives independent per-pulse seeds from one scene seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn noise_power<T: Real>(signal_power: f64, snr_db: T) -> Result<Option<f64>> {
    let snr = snr_db.as_f64();
    if snr.is_nan() {
        bail!(Scene, "SNR is NaN");
    }
    if snr == f64::INFINITY {
        return Ok(None);
    }
    if !(signal_power > 0.0) || !signal_power.is_finite() {
        bail!(Scene, "cannot set an SNR on a zero-power signal");
    }
    Ok(Some(signal_power / 10f64.powf(snr / 10.0)))
}

/// Adds real white Gaussian noise at `snr_db` relative to the mean-square
/// power of `signal`. `+inf` returns the input unchanged.
pub fn add_noise<T: Real>(signal: &SampledSignal<T>, snr_db: T, seed: u64) -> Result<SampledSignal<T>> {
    let p = signal.mean_square().as_f64();
    let Some(pn) = noise_power(p, snr_db)? else {
        return Ok(signal.clone());
    };
    let sd = pn.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = signal
        .samples
        .iter()
        .map(|&v| {
            let g: f64 = StandardNormal.sample(&mut rng);
            v + T::lit(sd * g)
        })
        .collect();
    SampledSignal::new(samples, signal.sample_rate, signal.start_time)
}

/// Circular complex white Gaussian noise, in place. `signal_power` is the
/// reference `E|x|^2`; pass `None` to measure it from `x`.
pub fn add_complex_noise<T: Real>(x: &mut [Complex<T>], signal_power: Option<T>, snr_db: T, seed: u64) -> Result<()> {
    let p = match signal_power {
        Some(p) => p.as_f64(),
        None if x.is_empty() => 0.0,
        None => x.iter().map(|v| v.norm_sqr().as_f64()).sum::<f64>() / x.len() as f64,
    };
    let Some(pn) = noise_power(p, snr_db)? else {
        return Ok(());
    };
    let sd = (pn / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in x.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v = *v + Complex::new(T::lit(sd * re), T::lit(sd * im));
    }
    Ok(())
}
