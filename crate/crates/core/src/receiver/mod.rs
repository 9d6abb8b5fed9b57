//! De-chirp reception: per-pulse record synthesis, subband separation
//! and range profiles.

mod config;
mod filterbank;
mod oracle;
mod profile;
mod synth;

pub use profile::{
    count_attributed, range_profile, resolve_peaks, resolve_peaks_with_floor, Peak, RangeProfile,
    DEFAULT_PEAK_FLOOR_DB, MIN_PAD,
};

pub use config::RadarConfig;
pub use filterbank::{band_tones, subband_extract, BandTones, SubbandFilterBank};
pub use oracle::dechirp_waveform_oracle;
pub use synth::{dechirp_synthesize, synthesize_echoes, DechirpedRecord};
