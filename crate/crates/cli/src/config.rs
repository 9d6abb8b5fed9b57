//! Scenario files: versioned JSON, parsed strictly (unknown keys are
//! errors) or laxly (unknown keys are warned about), then checked against
//! every physical constraint of the simulator.

use std::path::PathBuf;

use mbradar::dsp::Window;
use mbradar::fusion::{FusionMode, FusionOptions};
use mbradar::imaging::{ImagingMode, ImagingOptions};
use mbradar::photonics::MzmParams;
use mbradar::receiver::{RadarConfig, DEFAULT_PEAK_FLOOR_DB};
use mbradar::scene::{PointScatterer, RotatingPlatform, Scene, Targets};
use mbradar::waveform::LfmParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, ErrorKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Range,
    Fuse,
    Isar,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Range => "range",
            Experiment::Fuse => "fuse",
            Experiment::Isar => "isar",
            Experiment::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub seed: u64,
    pub experiment: Experiment,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub radar: RadarSection,
    pub scene: SceneSection,
    #[serde(default)]
    pub processing: Processing,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarSection {
    pub f_start: f64,
    pub bandwidth: f64,
    pub duration: f64,
    #[serde(default = "d_synth_rate")]
    pub synth_sample_rate: f64,
    pub modulation_index: f64,
    pub bias_angle: f64,
    #[serde(default = "d_carrier")]
    pub carrier_freq: f64,
    #[serde(default = "d_pm_index")]
    pub pm_index: f64,
    pub l_max: usize,
    pub prf: f64,
    pub dechirp_sample_rate: f64,
    pub range_window: [f64; 2],
}

fn d_synth_rate() -> f64 {
    12e9
}
fn d_carrier() -> f64 {
    193.1e12
}
fn d_pm_index() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScattererSpec {
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    #[serde(default = "one")]
    pub reflectivity: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSpec {
    pub center_range: f64,
    pub radius: f64,
    /// rad/s
    pub angular_rate: f64,
    pub angles_deg: Vec<f64>,
    /// Defaults to 1 for every scatterer.
    #[serde(default)]
    pub reflectivities: Option<Vec<f64>>,
}

/// Exactly one of `scatterers` and `rotating` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSection {
    #[serde(default)]
    pub scatterers: Option<Vec<ScattererSpec>>,
    #[serde(default)]
    pub rotating: Option<PlatformSpec>,
    #[serde(default)]
    pub noise_snr_db: Option<f64>,
    #[serde(default)]
    pub range_decay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Processing {
    pub window: Window,
    /// `subband:L`, `fused-direct` or `fused-allpole`; experiment default
    /// when absent.
    pub mode: Option<String>,
    pub peak_floor_db: f64,
    pub peak_separation_db: f64,
    pub fusion: FusionSection,
    pub isar: IsarSection,
    pub sweep: SweepSection,
}

impl Default for Processing {
    fn default() -> Self {
        Self {
            window: Window::Rect,
            mode: None,
            peak_floor_db: DEFAULT_PEAK_FLOOR_DB,
            peak_separation_db: 3.0,
            fusion: FusionSection::default(),
            isar: IsarSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionSection {
    pub delta_f: f64,
    pub max_order: usize,
    pub sv_threshold: f64,
    pub max_iters: usize,
    pub residual_gate: f64,
}

impl Default for FusionSection {
    fn default() -> Self {
        let d = FusionOptions::default();
        Self {
            delta_f: d.delta_f,
            max_order: d.max_order,
            sv_threshold: d.sv_threshold,
            max_iters: d.max_iters,
            residual_gate: d.residual_gate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IsarSection {
    pub n_pulses: usize,
    pub range_window: Window,
    pub doppler_window: Window,
    pub doppler_pad: usize,
    pub blob_floor_db: f64,
    pub blob_separation_db: f64,
}

impl Default for IsarSection {
    fn default() -> Self {
        Self {
            n_pulses: 128,
            range_window: Window::Hann,
            doppler_window: Window::Hann,
            doppler_pad: 4,
            blob_floor_db: -15.0,
            blob_separation_db: 3.0,
        }
    }
}

/// Two equal boresight targets centered on `center`; the separation is
/// bisected between `min_separation` and `max_separation` (m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub center: f64,
    pub min_separation: f64,
    pub max_separation: f64,
    pub tolerance: f64,
    /// Modes to sweep; all subbands plus both fused modes when empty.
    pub modes: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { center: 2.0, min_separation: 1e-3, max_separation: 0.19, tolerance: 2.5e-4, modes: vec![] }
    }
}

/// Fully checked scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub radar: RadarConfig<f64>,
    pub scene: Scene<f64>,
    pub mode: Option<ImagingMode>,
    pub sweep_modes: Vec<ImagingMode>,
}

impl Scenario {
    pub fn fusion_options(&self, mode: FusionMode) -> FusionOptions {
        let f = &self.config.processing.fusion;
        FusionOptions {
            delta_f: f.delta_f,
            mode,
            window: self.config.processing.window,
            max_order: f.max_order,
            sv_threshold: f.sv_threshold,
            max_iters: f.max_iters,
            residual_gate: f.residual_gate,
        }
    }

    pub fn imaging_options(&self) -> ImagingOptions {
        let i = &self.config.processing.isar;
        ImagingOptions {
            range_window: i.range_window,
            doppler_window: i.doppler_window,
            doppler_pad: i.doppler_pad,
            ..ImagingOptions::for_scene(&self.scene, &self.radar)
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub window: Option<Window>,
    pub mode: Option<String>,
    pub experiment: Option<Experiment>,
}

/// Parses and validates a scenario. `file` only labels errors.
pub fn parse_config(text: &str, file: &str, strict: bool) -> Result<ScenarioConfig, CliError> {
    let mut unknown: Vec<String> = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let parsed: Result<ScenarioConfig, _> = {
        let mut record = |path: serde_ignored::Path| unknown.push(pointer_of_ignored(&path));
        let ignoring = serde_ignored::Deserializer::new(&mut de, &mut record);
        serde_path_to_error::deserialize(ignoring)
    };
    let json_error = |inner: serde_json::Error, pointer: String| {
        let mut err = CliError::new(ErrorKind::Schema, "config", inner.to_string()).in_file(file);
        err.pointer = Some(pointer);
        if inner.line() > 0 {
            err.line = Some(inner.line());
            err.column = Some(inner.column());
        }
        err
    };
    let cfg = match parsed {
        Ok(c) => c,
        Err(e) => {
            let pointer = pointer_of_path(e.path());
            return Err(json_error(e.into_inner(), pointer));
        }
    };
    de.end().map_err(|e| json_error(e, "/".into()))?;
    for p in &unknown {
        if strict {
            let mut err = CliError::new(ErrorKind::Schema, "config", format!("unknown key {p}"))
                .in_file(file)
                .with_hint("remove the key or pass --lax to ignore it");
            err.pointer = Some(p.clone());
            err.line = locate(text, p);
            return Err(err);
        }
        log::warn!("{file}: ignoring unknown key {p}");
    }
    if cfg.schema != SCHEMA_VERSION {
        let mut err = CliError::new(
            ErrorKind::Schema,
            "config",
            format!("schema version {} is not supported, expected {SCHEMA_VERSION}", cfg.schema),
        )
        .in_file(file);
        err.pointer = Some("/schema".into());
        err.line = locate(text, "/schema");
        return Err(err);
    }
    Ok(cfg)
}

/// Applies overrides and checks every physical constraint.
pub fn build_scenario(mut cfg: ScenarioConfig, ov: &Overrides, text: &str, file: &str) -> Result<Scenario, CliError> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(d) = &ov.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(w) = ov.window {
        cfg.processing.window = w;
    }
    if let Some(m) = &ov.mode {
        cfg.processing.mode = Some(m.clone());
    }
    if let Some(e) = ov.experiment {
        cfg.experiment = e;
    }
    let physics = |pointer: &str, e: mbradar::Error| {
        let mut err = CliError::from_core(&e).in_file(file);
        err.kind = ErrorKind::Physics;
        err.pointer = Some(pointer.to_string());
        err.line = locate(text, pointer);
        if err.hint.is_none() {
            err.hint = hint_for(&e.to_string());
        }
        err
    };
    let schema = |pointer: &str, msg: String| {
        let mut err = CliError::new(ErrorKind::Schema, "config", msg).in_file(file);
        err.pointer = Some(pointer.to_string());
        err.line = locate(text, pointer);
        err
    };

    let r = &cfg.radar;
    let lfm =
        LfmParams::new(r.f_start, r.bandwidth, r.duration, r.synth_sample_rate).map_err(|e| physics("/radar", e))?;
    let mzm = MzmParams::new(r.modulation_index, r.bias_angle, r.carrier_freq, r.pm_index)
        .map_err(|e| physics("/radar", e))?;
    let radar = RadarConfig {
        lfm,
        mzm,
        l_max: r.l_max,
        prf: r.prf,
        dechirp_sample_rate: r.dechirp_sample_rate,
        range_window: (r.range_window[0], r.range_window[1]),
    };
    radar.validate().map_err(|e| {
        let msg = e.to_string();
        let ptr = if msg.contains("de-chirp sample rate") {
            "/radar/dechirp_sample_rate"
        } else if msg.contains("PRI") || msg.contains("PRF") {
            "/radar/prf"
        } else if msg.contains("range window") {
            "/radar/range_window"
        } else if msg.contains("l_max") {
            "/radar/l_max"
        } else {
            "/radar"
        };
        physics(ptr, e)
    })?;
    if let Some(&(a, b)) = radar.tone_clashes().first() {
        let (_, hi) = radar.tone_interval(a);
        let (lo, _) = radar.tone_interval(b);
        let mut err = CliError::new(
            ErrorKind::Physics,
            "receiver",
            format!("de-chirp tones of harmonics {a} and {b} overlap ({hi:.4e} Hz > {lo:.4e} Hz)"),
        )
        .in_file(file)
        .with_hint("narrow radar.range_window so that l_max * r_min > (l_max - 1) * r_max");
        err.pointer = Some("/radar/range_window".into());
        err.line = locate(text, "/radar/range_window");
        return Err(err);
    }

    let s = &cfg.scene;
    let targets = match (&s.scatterers, &s.rotating) {
        (Some(v), None) => {
            let pts = v
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    PointScatterer::new(p.x, p.y, p.reflectivity)
                        .map_err(|e| physics(&format!("/scene/scatterers/{i}"), e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Targets::Static(pts)
        }
        (None, Some(p)) => Targets::Rotating(RotatingPlatform {
            center_range: p.center_range,
            radius: p.radius,
            angular_rate: p.angular_rate,
            scatterer_angles: p.angles_deg.iter().map(|a| a.to_radians()).collect(),
            reflectivities: p.reflectivities.clone().unwrap_or_else(|| vec![1.0; p.angles_deg.len()]),
        }),
        _ => return Err(schema("/scene", "exactly one of scene.scatterers and scene.rotating must be given".into())),
    };
    let mut scene = Scene::new(targets, s.noise_snr_db, cfg.seed).map_err(|e| physics("/scene", e))?;
    scene.range_decay = s.range_decay;
    if scene.is_empty() {
        return Err(schema("/scene", "the scene holds no scatterer".into()));
    }
    if cfg.experiment != Experiment::Sweep {
        let (lo, hi) = scene.range_extent();
        if lo < radar.range_window.0 || hi > radar.range_window.1 {
            let mut err = CliError::new(
                ErrorKind::Physics,
                "scene",
                format!(
                    "targets span {lo:.4}-{hi:.4} m, outside the range window {}-{} m",
                    radar.range_window.0, radar.range_window.1
                ),
            )
            .in_file(file)
            .with_hint("move the targets or widen radar.range_window");
            err.pointer = Some("/scene".into());
            err.line = locate(text, "/scene");
            return Err(err);
        }
    }

    let mode = match &cfg.processing.mode {
        Some(m) => Some(parse_mode(m, radar.l_max).map_err(|e| schema("/processing/mode", e))?),
        None => None,
    };
    let sweep_modes = if cfg.processing.sweep.modes.is_empty() {
        let mut v: Vec<ImagingMode> = (1..=radar.l_max).map(ImagingMode::Subband).collect();
        v.extend([ImagingMode::FusedDirect, ImagingMode::FusedAllPole]);
        v
    } else {
        cfg.processing
            .sweep
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| parse_mode(m, radar.l_max).map_err(|e| schema(&format!("/processing/sweep/modes/{i}"), e)))
            .collect::<Result<_, _>>()?
    };

    let f = &cfg.processing.fusion;
    if !(f.delta_f > 0.0) || f.max_order == 0 || !(f.sv_threshold > 0.0 && f.sv_threshold < 1.0) {
        return Err(schema(
            "/processing/fusion",
            "fusion needs delta_f > 0, max_order >= 1 and 0 < sv_threshold < 1".into(),
        ));
    }
    let native = radar.l_max as f64 * radar.chirp_rate() / radar.dechirp_sample_rate;
    if f.delta_f < native {
        let mut err = CliError::new(
            ErrorKind::Physics,
            "fusion",
            format!("grid spacing {} Hz is finer than the coarsest native spacing {native} Hz", f.delta_f),
        )
        .in_file(file)
        .with_hint("raise processing.fusion.delta_f or radar.dechirp_sample_rate");
        err.pointer = Some("/processing/fusion/delta_f".into());
        err.line = locate(text, "/processing/fusion/delta_f");
        return Err(err);
    }
    let i = &cfg.processing.isar;
    if i.n_pulses < 2 || i.doppler_pad == 0 {
        return Err(schema("/processing/isar", "isar needs n_pulses >= 2 and doppler_pad >= 1".into()));
    }
    let sw = &cfg.processing.sweep;
    if !(sw.min_separation > 0.0 && sw.max_separation > sw.min_separation && sw.tolerance > 0.0) {
        return Err(schema(
            "/processing/sweep",
            "sweep needs 0 < min_separation < max_separation and tolerance > 0".into(),
        ));
    }
    if cfg.experiment == Experiment::Sweep {
        let (lo, hi) = (sw.center - 0.5 * sw.max_separation, sw.center + 0.5 * sw.max_separation);
        if lo < radar.range_window.0 || hi > radar.range_window.1 {
            return Err(schema(
                "/processing/sweep",
                format!("sweep targets reach {lo:.4}-{hi:.4} m, outside the range window"),
            ));
        }
    }
    if cfg.experiment == Experiment::Isar && !matches!(scene.targets, Targets::Rotating(_)) {
        return Err(schema("/scene", "the isar experiment needs a rotating scene".into()));
    }
    Ok(Scenario { config: cfg, radar, scene, mode, sweep_modes })
}

fn parse_mode(s: &str, l_max: usize) -> Result<ImagingMode, String> {
    let m: ImagingMode = s.parse()?;
    if let ImagingMode::Subband(l) = m {
        if l > l_max {
            return Err(format!("mode {s} exceeds l_max = {l_max}"));
        }
    }
    Ok(m)
}

fn hint_for(msg: &str) -> Option<String> {
    let h = if msg.contains("de-chirp sample rate") {
        "raise radar.dechirp_sample_rate above twice l_max * k * tau_max, or lower radar.range_window[1]"
    } else if msg.contains("PRI") {
        "lower radar.prf or shorten radar.duration"
    } else if msg.contains("chirp_rate") || msg.contains("bandwidth") {
        "check radar.bandwidth and radar.duration"
    } else if msg.contains("bias") {
        "radar.bias_angle must lie in [0, 2 pi)"
    } else if msg.contains("reflectivity") {
        "reflectivities must be finite and non-negative"
    } else {
        return None;
    };
    Some(h.to_string())
}

fn escape(seg: &str) -> String {
    seg.replace('~', "~0").replace('/', "~1")
}

fn pointer_of_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn pointer_of_ignored(path: &serde_ignored::Path) -> String {
    use serde_ignored::Path;
    match path {
        Path::Root => String::new(),
        Path::Seq { parent, index } => format!("{}/{index}", pointer_of_ignored(parent)),
        Path::Map { parent, key } => format!("{}/{}", pointer_of_ignored(parent), escape(key)),
        Path::Some { parent } | Path::NewtypeStruct { parent } | Path::NewtypeVariant { parent } => {
            pointer_of_ignored(parent)
        }
    }
}

/// Best-effort line of the value a JSON pointer names: each key is looked
/// up after the previous one. Array indices are skipped.
pub fn locate(text: &str, pointer: &str) -> Option<usize> {
    let mut pos = 0;
    let mut found = false;
    for seg in pointer.split('/').filter(|s| !s.is_empty()) {
        if seg.parse::<usize>().is_ok() {
            continue;
        }
        let key = format!("\"{}\"", seg.replace("~1", "/").replace("~0", "~"));
        let at = text[pos..].find(&key)?;
        pos += at + key.len();
        found = true;
    }
    found.then(|| text[..pos].matches('\n').count() + 1)
}
