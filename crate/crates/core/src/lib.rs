//! Photonic multiband radar simulation: LFM synthesis, MZM harmonic
//! generation, de-chirp reception, subband fusion and ISAR imaging.
//!
//! The signal-level types are generic over [`Real`]; aliases for `f64`
//! are provided at the crate root.

// NaN has to fail the `!(x > 0)` style guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsp;
pub mod error;
pub mod fusion;
pub mod imaging;
pub mod photonics;
pub mod receiver;
pub mod scalar;
pub mod scene;
pub mod waveform;

pub use error::{Error, Result};
pub use scalar::{Real, SPEED_OF_LIGHT};

pub type Lfm = waveform::LfmParams<f64>;
pub type Signal = waveform::SampledSignal<f64>;
pub type Mzm = photonics::MzmParams<f64>;
pub type Harmonics = photonics::HarmonicSpectrum<f64>;
pub type Plan = photonics::SubbandPlan<f64>;
pub type Band = photonics::Subband<f64>;
pub type Target = scene::PointScatterer<f64>;
pub type World = scene::Scene<f64>;
