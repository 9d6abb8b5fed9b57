//! Experiment drivers. Each returns the run report and writes its data
//! products; wall time goes to a separate file so that reports stay
//! byte-stable.

use std::time::Instant;

use mbradar::dsp::{fft_padded, next_pow2};
use mbradar::fusion::{FusionMode, FusionPipeline, FusionResult};
use mbradar::imaging::{collect_cpi, detect_blobs, isar_image, ImagingMode};
use mbradar::photonics::subband_plan;
use mbradar::receiver::{
    count_attributed, dechirp_synthesize, range_profile, resolve_peaks_with_floor, Peak, RadarConfig, RangeProfile,
    SubbandFilterBank, MIN_PAD,
};
use mbradar::scene::{PointScatterer, Scene, Targets};
use mbradar::SPEED_OF_LIGHT;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, Scenario, ScenarioConfig, SCHEMA_VERSION};
use crate::error::{CliError, ErrorKind};
use crate::output::{level_db, OutputDir};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub experiment: Experiment,
    pub seed: u64,
    /// Effective configuration after command-line overrides.
    pub config: ScenarioConfig,
    pub files: Vec<String>,
    pub results: Results,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum Results {
    Spectrum(SpectrumResult),
    Range(RangeResult),
    Fuse(FuseResult),
    Isar(IsarResult),
    Sweep(SweepResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub l: usize,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub coefficient: f64,
    pub dechirp_gain: f64,
    pub negligible: bool,
    /// `l k tau` of every echo at pulse 0.
    pub expected_tones_hz: Vec<f64>,
    /// Strongest de-chirp spectrum line inside the band's tone interval.
    pub measured_tone_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub total_span_hz: f64,
    pub occupied_bandwidth_hz: f64,
    pub overlaps: Vec<(usize, usize)>,
    pub bin_hz: f64,
    pub bands: Vec<BandReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub range_m: f64,
    pub level_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub mode: String,
    pub file: String,
    pub peaks: Vec<PeakReport>,
    /// Targets owning a peak closer than half the gap to their neighbour.
    pub resolved_targets: usize,
    /// -3 dB width around the strongest peak.
    pub mainlobe_width_m: Option<f64>,
    pub theoretical_resolution_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeResult {
    pub truth_m: Vec<f64>,
    pub profiles: Vec<ProfileReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScattererReport {
    pub range_m: f64,
    pub delay_s: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuseResult {
    pub truth_m: Vec<f64>,
    pub n_bins: usize,
    pub occupancy: f64,
    pub profile: ProfileReport,
    /// Zero-filled profile for comparison when the gaps were model-filled.
    pub direct: Option<ProfileReport>,
    /// Separation of the two strongest profile peaks.
    pub peak_separation_m: Option<f64>,
    /// Refined pole model, sorted by range.
    pub scatterers: Vec<ScattererReport>,
    pub scatterer_separation_m: Option<f64>,
    pub initial_order: Option<usize>,
    pub fit_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub range_m: f64,
    pub crossrange_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobReport {
    pub range_m: f64,
    pub crossrange_m: f64,
    pub level_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsarResult {
    pub mode: String,
    pub n_pulses: usize,
    pub cpi_s: f64,
    pub rotation_rad: f64,
    pub wavelength_m: f64,
    pub range_cell_m: f64,
    pub crossrange_cell_m: f64,
    /// Scatterer positions at the CPI center.
    pub truth: Vec<ImagePoint>,
    pub blobs: Vec<BlobReport>,
    /// Ground-truth points with a blob within one cell in both axes.
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub mode: String,
    /// Smallest separation found resolved; `None` when even the largest
    /// one is not.
    pub min_resolvable_m: Option<f64>,
    pub theoretical_resolution_m: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub center_m: f64,
    pub entries: Vec<SweepEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProfileRow {
    range_m: f64,
    magnitude: f64,
    level_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpectrumRow {
    frequency_hz: f64,
    level_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HarmonicRow {
    l: usize,
    f_low_hz: f64,
    f_high_hz: f64,
    coefficient: f64,
    dechirp_gain: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GappedRow {
    frequency_hz: f64,
    occupied: bool,
    measured_re: f64,
    measured_im: f64,
    fused_re: f64,
    fused_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlobRow {
    range_m: f64,
    crossrange_m: f64,
    level_db: f64,
}

/// Theoretical resolution `c / (2 B)` of a processing mode.
pub fn theoretical_resolution(cfg: &RadarConfig<f64>, mode: ImagingMode) -> f64 {
    match mode {
        ImagingMode::Subband(l) => cfg.range_resolution(l),
        _ => {
            let span = cfg.l_max as f64 * cfg.lfm.f_stop() - cfg.lfm.f_start;
            0.5 * SPEED_OF_LIGHT / span
        }
    }
}

/// Per-mode range profiling of single records, with the filter bank and
/// fusion pipelines built once.
pub struct Profiler<'a> {
    scn: &'a Scenario,
    bank: SubbandFilterBank,
    direct: FusionPipeline,
    allpole: FusionPipeline,
}

impl<'a> Profiler<'a> {
    pub fn new(scn: &'a Scenario) -> Result<Self, CliError> {
        Ok(Self {
            scn,
            bank: SubbandFilterBank::new(&scn.radar)?,
            direct: FusionPipeline::new(&scn.radar, scn.fusion_options(FusionMode::Direct))?,
            allpole: FusionPipeline::new(&scn.radar, scn.fusion_options(FusionMode::AllPole))?,
        })
    }

    pub fn pipeline(&self, mode: ImagingMode) -> &FusionPipeline {
        if mode == ImagingMode::FusedDirect {
            &self.direct
        } else {
            &self.allpole
        }
    }

    /// Profile of pulse 0 of `scene`, plus the fusion products in fused
    /// modes.
    pub fn profile(
        &self,
        scene: &Scene<f64>,
        mode: ImagingMode,
    ) -> Result<(RangeProfile<f64>, Option<FusionResult>), CliError> {
        let rec = dechirp_synthesize(scene, &self.scn.radar, 0)?;
        match mode {
            ImagingMode::Subband(l) => {
                let slice = self.bank.extract(&rec, l)?;
                Ok((range_profile(&slice, l, &self.scn.radar, self.scn.config.processing.window)?, None))
            }
            _ => {
                let p = self.pipeline(mode);
                let r = p.process(&rec)?;
                Ok((p.profile(&r)?, Some(r)))
            }
        }
    }

    pub fn peaks(&self, profile: &RangeProfile<f64>) -> Vec<Peak<f64>> {
        let pr = &self.scn.config.processing;
        resolve_peaks_with_floor(profile, pr.peak_separation_db, pr.peak_floor_db)
    }
}

fn mode_label(mode: ImagingMode) -> String {
    match mode {
        ImagingMode::Subband(l) => format!("subband-{l}"),
        m => m.to_string(),
    }
}

fn write_profile(
    out: &mut OutputDir,
    prof: &Profiler,
    mode: ImagingMode,
    profile: &RangeProfile<f64>,
    truth: &[f64],
) -> Result<ProfileReport, CliError> {
    let file = format!("profile_{}.csv", mode_label(mode));
    let top = profile.max_magnitude();
    out.csv(
        &file,
        profile.ranges.iter().zip(&profile.magnitudes).map(|(&r, &m)| ProfileRow {
            range_m: r,
            magnitude: m,
            level_db: level_db(m, top),
        }),
    )?;
    let peaks = prof.peaks(profile);
    Ok(ProfileReport {
        mode: mode.to_string(),
        file,
        resolved_targets: count_attributed(&peaks, truth),
        peaks: peaks.iter().map(|p| PeakReport { range_m: p.range, level_db: level_db(p.magnitude, top) }).collect(),
        mainlobe_width_m: profile.peak_width(3.0),
        theoretical_resolution_m: theoretical_resolution(&prof.scn.radar, mode),
    })
}

fn truth_ranges(scene: &Scene<f64>, t: f64) -> Vec<f64> {
    let mut v: Vec<f64> = scene.positions_at(t).iter().map(|p| p.range()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn spectrum(scn: &Scenario, out: &mut OutputDir) -> Result<Results, CliError> {
    let cfg = &scn.radar;
    let plan = subband_plan(&cfg.lfm, cfg.l_max)?;
    let h = cfg.harmonics()?;
    let gains = cfg.band_gains()?;
    let rec = dechirp_synthesize(&scn.scene, cfg, 0)?;
    let valid = rec.valid();
    let m = next_pow2(MIN_PAD * valid.len());
    let spec = fft_padded(valid, m);
    let bin = rec.sample_rate / m as f64;
    let mags: Vec<f64> = spec[..m / 2].iter().map(|v| v.norm() / valid.len() as f64).collect();
    let top = mags.iter().copied().fold(0.0, f64::max);
    out.csv(
        "harmonics.csv",
        plan.bands.iter().map(|b| HarmonicRow {
            l: b.l,
            f_low_hz: b.f_low,
            f_high_hz: b.f_high,
            coefficient: h.coefficients[b.l],
            dechirp_gain: gains[b.l - 1],
        }),
    )?;
    out.csv(
        "dechirp_spectrum.csv",
        mags.iter().enumerate().map(|(i, &v)| SpectrumRow { frequency_hz: i as f64 * bin, level_db: level_db(v, top) }),
    )?;
    let echoes = scn.scene.scatterers_at(0.0);
    let bands = plan
        .bands
        .iter()
        .map(|b| {
            let (lo, hi) = cfg.tone_interval(b.l);
            let (i0, i1) = ((lo / bin).floor() as usize, ((hi / bin).ceil() as usize).min(m / 2 - 1));
            let best = (i0..=i1).max_by(|&a, &c| mags[a].total_cmp(&mags[c])).unwrap_or(i0);
            BandReport {
                l: b.l,
                f_low_hz: b.f_low,
                f_high_hz: b.f_high,
                coefficient: h.coefficients[b.l],
                dechirp_gain: gains[b.l - 1],
                negligible: h.is_negligible(b.l),
                expected_tones_hz: echoes.iter().map(|e| cfg.tone_frequency(b.l, e.delay)).collect(),
                measured_tone_hz: best as f64 * bin,
            }
        })
        .collect();
    Ok(Results::Spectrum(SpectrumResult {
        total_span_hz: plan.total_span,
        occupied_bandwidth_hz: plan.occupied_bandwidth(),
        overlaps: plan.overlaps.clone(),
        bin_hz: bin,
        bands,
    }))
}

fn range(scn: &Scenario, out: &mut OutputDir) -> Result<Results, CliError> {
    let prof = Profiler::new(scn)?;
    let modes: Vec<ImagingMode> = match scn.mode {
        Some(m) => vec![m],
        None => (1..=scn.radar.l_max).map(ImagingMode::Subband).collect(),
    };
    let truth = truth_ranges(&scn.scene, 0.0);
    let mut profiles = vec![];
    for m in modes {
        let (p, _) = prof.profile(&scn.scene, m)?;
        profiles.push(write_profile(out, &prof, m, &p, &truth)?);
    }
    Ok(Results::Range(RangeResult { truth_m: truth, profiles }))
}

fn fuse(scn: &Scenario, out: &mut OutputDir) -> Result<Results, CliError> {
    let mode = scn.mode.unwrap_or(ImagingMode::FusedAllPole);
    if matches!(mode, ImagingMode::Subband(_)) {
        return Err(CliError::new(ErrorKind::Schema, "config", "the fuse experiment needs a fused mode")
            .with_hint("use --mode fused-direct or --mode fused-allpole"));
    }
    let prof = Profiler::new(scn)?;
    let (profile, fr) = prof.profile(&scn.scene, mode)?;
    let fr = fr.expect("fused modes return fusion products");
    let truth = truth_ranges(&scn.scene, 0.0);
    let report = write_profile(out, &prof, mode, &profile, &truth)?;
    let g = &fr.gapped;
    out.csv(
        "gapped_spectrum.csv",
        (0..g.len()).map(|i| GappedRow {
            frequency_hz: g.freq(i),
            occupied: g.mask[i],
            measured_re: g.values[i].re,
            measured_im: g.values[i].im,
            fused_re: fr.spectrum[i].re,
            fused_im: fr.spectrum[i].im,
        }),
    )?;
    let direct = if mode == ImagingMode::FusedAllPole {
        let d = &prof.direct;
        let r = d.fuse_gapped(fr.segments.clone(), fr.gapped.clone())?;
        Some(write_profile(out, &prof, ImagingMode::FusedDirect, &d.profile(&r)?, &truth)?)
    } else {
        None
    };
    let mut scatterers: Vec<ScattererReport> = fr
        .model
        .as_ref()
        .map(|m| {
            m.delays
                .iter()
                .zip(&m.amplitudes)
                .map(|(&d, a)| ScattererReport {
                    range_m: 0.5 * SPEED_OF_LIGHT * d,
                    delay_s: d,
                    amplitude: a.norm(),
                    phase_rad: a.arg(),
                })
                .collect()
        })
        .unwrap_or_default();
    scatterers.sort_by(|a, b| a.range_m.total_cmp(&b.range_m));
    if fr.model.is_some() {
        out.csv("poles.csv", scatterers.iter())?;
    }
    let two = |v: &[f64]| (v.len() >= 2).then(|| (v[1] - v[0]).abs());
    let strongest: Vec<f64> = {
        let mut ps = report.peaks.clone();
        ps.sort_by(|a, b| b.level_db.total_cmp(&a.level_db));
        ps.iter().take(2).map(|p| p.range_m).collect()
    };
    let sc_sep = if scatterers.len() == 2 { Some(scatterers[1].range_m - scatterers[0].range_m) } else { None };
    Ok(Results::Fuse(FuseResult {
        truth_m: truth,
        n_bins: g.len(),
        occupancy: g.occupancy(),
        profile: report,
        direct,
        peak_separation_m: two(&strongest),
        scatterers,
        scatterer_separation_m: sc_sep,
        initial_order: fr.initial.as_ref().map(|m| m.order),
        fit_residual: fr.model.as_ref().map(|m| m.fit_residual),
    }))
}

fn isar(scn: &Scenario, out: &mut OutputDir) -> Result<Results, CliError> {
    let mode = scn.mode.unwrap_or(ImagingMode::FusedAllPole);
    let cfg = &scn.radar;
    let is = &scn.config.processing.isar;
    let fusion = scn.fusion_options(FusionMode::AllPole);
    let dm = collect_cpi(&scn.scene, cfg, is.n_pulses, mode, &fusion)?;
    let img = isar_image(&dm, cfg, &scn.imaging_options())?;
    let blobs = detect_blobs(&img, is.blob_floor_db, is.blob_separation_db);
    out.image_csv("image.csv", &img)?;
    out.pgm("image.pgm", &img)?;
    let top = img.max();
    let blob_rows: Vec<BlobRow> = blobs
        .iter()
        .map(|b| BlobRow { range_m: b.range, crossrange_m: b.crossrange, level_db: 0.5 * level_db(b.intensity, top) })
        .collect();
    out.csv("blobs.csv", blob_rows.iter())?;

    let cpi = is.n_pulses as f64 / cfg.prf;
    let omega = match &scn.scene.targets {
        Targets::Rotating(p) => p.angular_rate,
        Targets::Static(_) => 0.0,
    };
    let tc = 0.5 * cpi;
    let truth: Vec<ImagePoint> =
        scn.scene.positions_at(tc).iter().map(|p| ImagePoint { range_m: p.range(), crossrange_m: p.y }).collect();
    let range_cell = theoretical_resolution(cfg, mode);
    let cross_cell = if omega != 0.0 { img.wavelength / (2.0 * omega.abs() * cpi) } else { f64::INFINITY };
    let matched = truth
        .iter()
        .filter(|t| {
            blobs.iter().any(|b| {
                (b.range - t.range_m).abs() <= range_cell && (b.crossrange - t.crossrange_m).abs() <= cross_cell
            })
        })
        .count();
    Ok(Results::Isar(IsarResult {
        mode: mode.to_string(),
        n_pulses: is.n_pulses,
        cpi_s: cpi,
        rotation_rad: omega * cpi,
        wavelength_m: img.wavelength,
        range_cell_m: range_cell,
        crossrange_cell_m: cross_cell,
        truth,
        blobs: blob_rows
            .into_iter()
            .map(|b| BlobReport { range_m: b.range_m, crossrange_m: b.crossrange_m, level_db: b.level_db })
            .collect(),
        matched,
    }))
}

/// Two equal boresight targets `sep` apart around `center`.
pub fn pair_scene(scn: &Scenario, center: f64, sep: f64) -> Result<Scene<f64>, CliError> {
    let pts =
        vec![PointScatterer::at_range(center - 0.5 * sep, 1.0)?, PointScatterer::at_range(center + 0.5 * sep, 1.0)?];
    let mut s = Scene::new(Targets::Static(pts), scn.scene.noise_snr_db, scn.scene.rng_seed)?;
    s.range_decay = scn.scene.range_decay;
    Ok(s)
}

/// Bisection on the separation of a two-target pair. A separation counts
/// as resolved when both targets own a peak; the relative echo phase
/// changes with the separation, so the result is not strictly monotone
/// and the bisection reports one crossing.
fn sweep(scn: &Scenario, out: &mut OutputDir) -> Result<Results, CliError> {
    let prof = Profiler::new(scn)?;
    let sw = &scn.config.processing.sweep;
    let mut entries = vec![];
    for &mode in &scn.sweep_modes {
        let mut evaluations = 0;
        let mut resolved = |sep: f64| -> Result<bool, CliError> {
            evaluations += 1;
            let scene = pair_scene(scn, sw.center, sep)?;
            let truth = [sw.center - 0.5 * sep, sw.center + 0.5 * sep];
            match prof.profile(&scene, mode) {
                Ok((p, _)) => Ok(count_attributed(&prof.peaks(&p), &truth) == 2),
                // a pole model that fails its gate resolves nothing
                Err(e) if e.module == "fusion" => Ok(false),
                Err(e) => Err(e),
            }
        };
        let (mut lo, mut hi) = (sw.min_separation, sw.max_separation);
        let min_resolvable = if !resolved(hi)? {
            None
        } else if resolved(lo)? {
            Some(lo)
        } else {
            while hi - lo > sw.tolerance {
                let mid = 0.5 * (lo + hi);
                if resolved(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        };
        log::info!("sweep {mode}: {min_resolvable:?}");
        entries.push(SweepEntry {
            mode: mode.to_string(),
            min_resolvable_m: min_resolvable,
            theoretical_resolution_m: theoretical_resolution(&scn.radar, mode),
            evaluations,
        });
    }
    out.csv("sweep.csv", entries.iter())?;
    Ok(Results::Sweep(SweepResult { center_m: sw.center, entries }))
}

/// Runs the scenario's experiment into its output directory and writes
/// `report.json` plus `timing.json`.
pub fn run(scn: &Scenario) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let mut out = OutputDir::create(&scn.config.output_dir)?;
    let results = match scn.config.experiment {
        Experiment::Spectrum => spectrum(scn, &mut out)?,
        Experiment::Range => range(scn, &mut out)?,
        Experiment::Fuse => fuse(scn, &mut out)?,
        Experiment::Isar => isar(scn, &mut out)?,
        Experiment::Sweep => sweep(scn, &mut out)?,
    };
    let mut files = out.written().to_vec();
    files.push("report.json".into());
    let report = RunReport {
        schema: SCHEMA_VERSION,
        experiment: scn.config.experiment,
        seed: scn.config.seed,
        config: scn.config.clone(),
        files,
        results,
    };
    out.json("report.json", &report)?;
    out.json("timing.json", &serde_json::json!({ "wall_time_s": start.elapsed().as_secs_f64() }))?;
    Ok(report)
}
