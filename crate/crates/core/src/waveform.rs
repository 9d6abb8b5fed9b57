//! Intermediate-frequency LFM drive: parameters, synthesis and
//! time-frequency bookkeeping.

use num_complex::Complex;
use num_traits::Float;

use crate::dsp::analytic_signal;
use crate::error::{bail, Result};
use crate::scalar::Real;

/// Linear FM pulse definition. Time origin is the pulse start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfmParams<T> {
    /// Start frequency, Hz.
    pub f_start: T,
    /// Swept bandwidth, Hz.
    pub bandwidth: T,
    /// Pulse duration, s.
    pub duration: T,
    /// `bandwidth / duration`, Hz/s. Derived by [`LfmParams::new`].
    pub chirp_rate: T,
    /// Sample rate used for waveform-level synthesis, Hz.
    pub sample_rate: T,
}

impl<T: Real> LfmParams<T> {
    pub fn new(f_start: T, bandwidth: T, duration: T, sample_rate: T) -> Result<Self> {
        let p = Self { f_start, bandwidth, duration, chirp_rate: bandwidth / duration, sample_rate };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.f_start, self.bandwidth, self.duration, self.chirp_rate, self.sample_rate];
        if vals.iter().any(|v| !v.is_finite()) {
            bail!(Waveform, "non-finite LFM parameter");
        }
        if self.bandwidth <= T::zero() || self.duration <= T::zero() {
            bail!(Waveform, "bandwidth and duration must be positive");
        }
        if self.f_start < T::zero() || self.sample_rate <= T::zero() {
            bail!(Waveform, "start frequency must be >= 0 and sample rate > 0");
        }
        let mismatch = Float::abs(self.chirp_rate * self.duration - self.bandwidth) / self.bandwidth;
        if mismatch > T::lit(1e-12).max(T::lit(8.0) * T::epsilon()) {
            bail!(Waveform, "chirp_rate * duration differs from bandwidth by {mismatch}");
        }
        Ok(())
    }

    pub fn f_stop(&self) -> T {
        self.f_start + self.bandwidth
    }

    /// Drive phase `2*pi*f_start*t + pi*k*t^2`.
    pub fn phase(&self, t: T) -> T {
        T::TAU() * (self.f_start * t + T::lit(0.5) * self.chirp_rate * t * t)
    }

    /// Number of samples in one pulse at `rate`.
    pub fn samples_per_pulse(&self, rate: T) -> usize {
        sample_count(self.duration, rate)
    }

    /// Drive value at an arbitrary time; zero outside `[0, T)`.
    pub fn value_at(&self, t: T) -> T {
        if t < T::zero() || t >= self.duration {
            T::zero()
        } else {
            self.phase(t).cos()
        }
    }
}

/// `floor(duration * rate)`, robust to representation error in the product.
pub(crate) fn sample_count<T: Real>(duration: T, rate: T) -> usize {
    let n = (duration * rate).as_f64();
    let r = n.round();
    if (n - r).abs() < 1e-6 {
        r as usize
    } else {
        n.floor() as usize
    }
}

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<T> {
    pub samples: Vec<T>,
    pub sample_rate: T,
    pub start_time: T,
}

impl<T: Real> SampledSignal<T> {
    pub fn new(samples: Vec<T>, sample_rate: T, start_time: T) -> Result<Self> {
        if samples.is_empty() {
            bail!(Waveform, "sampled signal must be nonempty");
        }
        if samples.iter().any(|v| !v.is_finite()) {
            bail!(Waveform, "sampled signal contains non-finite values");
        }
        if !(sample_rate > T::zero()) || !sample_rate.is_finite() {
            bail!(Waveform, "sample rate must be positive and finite");
        }
        Ok(Self { samples, sample_rate, start_time })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        self.start_time + T::from_usize_lossy(i) / self.sample_rate
    }

    pub fn mean_square(&self) -> T {
        let s = self.samples.iter().fold(T::zero(), |acc, &v| acc + v * v);
        s / T::from_usize_lossy(self.samples.len())
    }

    /// Quadrature (analytic) form, used for phase extraction.
    pub fn analytic(&self) -> Vec<Complex<T>> {
        analytic_signal(&self.samples)
    }
}

/// Samples `cos(phi(t))` over one pulse at `params.sample_rate`.
pub fn generate_lfm<T: Real>(params: &LfmParams<T>) -> Result<SampledSignal<T>> {
    params.validate()?;
    let nyquist = T::lit(2.0) * params.f_stop();
    if params.sample_rate < nyquist {
        bail!(Waveform, "sample rate {} Hz is below the Nyquist rate {} Hz of the drive", params.sample_rate, nyquist);
    }
    let n = params.samples_per_pulse(params.sample_rate);
    if n == 0 {
        bail!(Waveform, "pulse shorter than one sample");
    }
    let samples = (0..n).map(|i| params.phase(T::from_usize_lossy(i) / params.sample_rate).cos()).collect();
    SampledSignal::new(samples, params.sample_rate, T::zero())
}

/// `f_start + chirp_rate * t` for `t` inside the pulse.
pub fn instantaneous_frequency<T: Real>(params: &LfmParams<T>, t: T) -> Result<T> {
    if !t.is_finite() || t < T::zero() || t > params.duration {
        bail!(Waveform, "time {t} s lies outside the pulse [0, {}] s", params.duration);
    }
    Ok(params.f_start + params.chirp_rate * t)
}
