use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::profile::{direct_weights, filled_spectrum, range_line, range_step};
use super::{
    assemble_gapped, estimate_poles, refine_global, segment_from_tones, BandSegment, GappedSpectrum, PencilOptions,
    PoleModel, DEFAULT_MAX_ITERS, DEFAULT_RESIDUAL_GATE,
};
use crate::dsp::Window;
use crate::error::{bail, Result};
use crate::receiver::{DechirpedRecord, RadarConfig, RangeProfile, SubbandFilterBank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMode {
    /// Zero-filled gaps.
    Direct,
    /// Gaps filled from a refined all-pole model.
    AllPole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionOptions {
    pub delta_f: f64,
    pub mode: FusionMode,
    pub window: Window,
    pub max_order: usize,
    pub sv_threshold: f64,
    pub max_iters: usize,
    pub residual_gate: f64,
}

impl Default for FusionOptions {
    fn default() -> Self {
        Self {
            delta_f: 2.5e6,
            mode: FusionMode::AllPole,
            window: Window::Rect,
            max_order: 8,
            sv_threshold: 1e-3,
            max_iters: DEFAULT_MAX_ITERS,
            residual_gate: DEFAULT_RESIDUAL_GATE,
        }
    }
}

/// Everything produced for one pulse.
#[derive(Debug, Clone)]
pub struct FusionResult {
    pub segments: Vec<BandSegment>,
    pub gapped: GappedSpectrum,
    /// Initial matrix-pencil estimate and its refinement (all-pole mode).
    pub initial: Option<PoleModel>,
    pub model: Option<PoleModel>,
    /// Spectrum fed to the inverse transform: gaps zero or model-filled.
    pub spectrum: Vec<Complex64>,
}

/// Record-to-fused-spectrum chain with the filter bank built once.
#[derive(Debug, Clone)]
pub struct FusionPipeline {
    cfg: RadarConfig<f64>,
    bank: SubbandFilterBank,
    opts: FusionOptions,
    bands: Vec<usize>,
}

impl FusionPipeline {
    pub fn new(cfg: &RadarConfig<f64>, opts: FusionOptions) -> Result<Self> {
        let bank = SubbandFilterBank::new(cfg)?;
        let h = cfg.harmonics()?;
        let bands: Vec<usize> = (1..=cfg.l_max).filter(|&l| !h.is_negligible(l)).collect();
        for l in 1..=cfg.l_max {
            if h.is_negligible(l) {
                log::warn!("harmonic {l} is below the {} dB floor and is left out of fusion", h.floor_db);
            }
        }
        if bands.is_empty() {
            bail!(Fusion, "no harmonic carries usable energy");
        }
        Ok(Self { cfg: cfg.clone(), bank, opts, bands })
    }

    pub fn options(&self) -> &FusionOptions {
        &self.opts
    }

    pub fn config(&self) -> &RadarConfig<f64> {
        &self.cfg
    }

    pub fn bank(&self) -> &SubbandFilterBank {
        &self.bank
    }

    pub fn pencil_options(&self) -> PencilOptions {
        PencilOptions::new(self.opts.max_order, self.opts.sv_threshold, self.cfg.range_window)
    }

    pub fn segments(&self, rec: &DechirpedRecord<f64>) -> Result<Vec<BandSegment>> {
        let tones = self.bank.tones(rec)?;
        self.bands.iter().map(|&l| segment_from_tones(&tones[l - 1], &self.cfg, self.opts.delta_f)).collect()
    }

    /// Gapped spectrum to fused spectrum according to the configured mode.
    pub fn fuse_gapped(&self, segments: Vec<BandSegment>, gapped: GappedSpectrum) -> Result<FusionResult> {
        match self.opts.mode {
            FusionMode::Direct => {
                let spectrum = gapped.values.clone();
                Ok(FusionResult { segments, gapped, initial: None, model: None, spectrum })
            }
            FusionMode::AllPole => {
                let initial = estimate_poles(&gapped, &self.pencil_options())?;
                if initial.is_empty() {
                    bail!(Fusion, "no scatterer found in the range window; use the direct fused profile");
                }
                let model = refine_global(&gapped, &initial, self.opts.max_iters)?;
                if !(model.fit_residual <= self.opts.residual_gate) {
                    bail!(
                        Fusion,
                        "pole model residual {:.3e} exceeds the gate {}; use the direct fused profile instead",
                        model.fit_residual,
                        self.opts.residual_gate
                    );
                }
                let spectrum = filled_spectrum(&gapped, &model);
                Ok(FusionResult { segments, gapped, initial: Some(initial), model: Some(model), spectrum })
            }
        }
    }

    pub fn process(&self, rec: &DechirpedRecord<f64>) -> Result<FusionResult> {
        let segments = self.segments(rec)?;
        let gapped = assemble_gapped(&segments)?;
        self.fuse_gapped(segments, gapped)
    }

    /// Window applied across the fused spectrum before the inverse DFT.
    pub fn weights(&self, r: &FusionResult) -> Vec<f64> {
        match self.opts.mode {
            FusionMode::Direct => direct_weights(&r.gapped, self.opts.window),
            FusionMode::AllPole => self.opts.window.coefficients(r.gapped.len()),
        }
    }

    /// Complex range line over the full unambiguous range, with its cell size.
    pub fn range_line(&self, r: &FusionResult) -> (Vec<Complex64>, f64) {
        let line = range_line(&r.spectrum, &self.weights(r));
        let dr = range_step(line.len(), r.gapped.delta_f);
        (line, dr)
    }

    /// Fused magnitude profile over the full unambiguous range.
    pub fn profile(&self, r: &FusionResult) -> Result<RangeProfile<f64>> {
        let (line, dr) = self.range_line(r);
        let label = match self.opts.mode {
            FusionMode::Direct => "fused-direct",
            FusionMode::AllPole => "fused-allpole",
        };
        RangeProfile::new(
            (0..line.len()).map(|i| i as f64 * dr).collect(),
            line.iter().map(|v| v.norm()).collect(),
            label,
        )
    }
}
