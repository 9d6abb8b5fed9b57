//! Multiband fusion: subband records to RF spectral samples, gapped
//! spectrum assembly, direct and all-pole fused range profiles.

mod coherence;
mod gapped;
mod linalg;
mod pencil;
mod pipeline;
mod profile;
mod refine;
mod segment;

pub use coherence::{fit_global_constant, inject_band_phases, GlobalFit};
pub use gapped::{assemble_gapped, GappedSpectrum};
pub use pencil::{estimate_poles, fit_amplitudes, PencilOptions, PoleModel, MAX_CONDITION};
pub use pipeline::{FusionMode, FusionOptions, FusionPipeline, FusionResult};
pub use profile::{filled_spectrum, fuse_direct, gap_fill_profile, DEFAULT_RESIDUAL_GATE, FUSED_PAD};
pub use refine::{refine_global, DEFAULT_MAX_ITERS};
pub use segment::{closed_form_response, segment_from_tones, to_band_segment, BandSegment};
