//! End-to-end checks across modules: waveform to photodiode, record to
//! fused spectrum, and profile widths across processing modes.

use mbradar::dsp::{fft_padded, Window};
use mbradar::fusion::{
    assemble_gapped, closed_form_response, estimate_poles, fit_global_constant, inject_band_phases, refine_global,
    FusionMode, FusionOptions, FusionPipeline,
};
use mbradar::photonics::{harmonic_amplitudes, mzm_pd_oracle, MzmParams};
use mbradar::receiver::{dechirp_synthesize, range_profile, RadarConfig, SubbandFilterBank};
use mbradar::scene::{PointScatterer, Scene};
use mbradar::waveform::{generate_lfm, LfmParams};
use mbradar::SPEED_OF_LIGHT;
use num_complex::Complex64;

fn scene(ranges: &[f64], refl: &[f64]) -> Scene<f64> {
    Scene::fixed(ranges.iter().zip(refl).map(|(&r, &a)| PointScatterer::at_range(r, a).unwrap()).collect()).unwrap()
}

#[test]
fn photodiode_power_sits_in_the_harmonic_bands() {
    let lfm = LfmParams::new(47e6, 10e6, 20e-6, 2e9).unwrap();
    let mzm = MzmParams::new(3.0, std::f64::consts::FRAC_PI_4, 193.1e12, 0.1).unwrap();
    let pd = mzm_pd_oracle(&generate_lfm(&lfm).unwrap(), &mzm).unwrap();
    let h = harmonic_amplitudes(&mzm, 8).unwrap();
    let n = pd.len();
    let spec = fft_padded(&pd.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>(), n);
    let df = pd.sample_rate / n as f64;
    // one-sided power per bin, normalized so a unit cosine carries 1/2
    let power = |i: usize| 2.0 * spec[i].norm_sqr() / (n as f64 * n as f64);
    let band_power =
        |lo: f64, hi: f64| ((lo / df).ceil() as usize..=(hi / df).floor() as usize).map(power).sum::<f64>();
    let ac: f64 = (1..n / 2).map(power).sum();
    let mut inside = 0.0;
    for l in 1..=4 {
        let lf = l as f64;
        // chirp spectra spill past their nominal edges by a few 1/T
        let got = band_power(lf * 47e6 - 1e6, lf * 57e6 + 1e6);
        let want = 0.5 * h.coefficients[l] * h.coefficients[l];
        assert!((got / want - 1.0).abs() < 0.03, "l={l}: {got} vs {want}");
        inside += got;
    }
    let higher: f64 = (5..=8).map(|l| 0.5 * h.coefficients[l] * h.coefficients[l]).sum();
    assert!((ac - inside - higher).abs() < 0.01 * ac, "unaccounted power {}", ac - inside - higher);
}

#[test]
fn one_constant_aligns_all_bands() {
    let cfg = RadarConfig::<f64>::standard();
    let pipe = FusionPipeline::new(&cfg, FusionOptions { mode: FusionMode::Direct, ..Default::default() }).unwrap();
    for (ranges, refl) in [(vec![1.99575, 2.00425], vec![1.0, 1.0]), (vec![1.93, 2.0, 2.061], vec![1.0, 0.6, 0.3])] {
        let rec = dechirp_synthesize(&scene(&ranges, &refl), &cfg, 0).unwrap();
        let g = pipe.process(&rec).unwrap().gapped;
        let delays: Vec<f64> = ranges.iter().map(|r| 2.0 * r / SPEED_OF_LIGHT).collect();
        let amps: Vec<Complex64> = refl.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let h = closed_form_response(&g.freqs(), &delays, &amps);
        let fit = fit_global_constant(&g, &h).unwrap();
        assert!(fit.max_rel_error < 1e-3, "{}", fit.max_rel_error);
        assert!((fit.constant - 1.0).norm() < 1e-3, "{}", fit.constant);
    }
}

#[test]
fn random_band_phases_ruin_the_global_fit() {
    let cfg = RadarConfig::<f64>::standard();
    let pipe = FusionPipeline::new(&cfg, FusionOptions::default()).unwrap();
    let rec = dechirp_synthesize(&scene(&[1.97, 2.0, 2.03], &[1.0, 0.8, 0.6]), &cfg, 0).unwrap();
    let segs = pipe.segments(&rec).unwrap();
    let fit = |segs: &[mbradar::fusion::BandSegment]| {
        let g = assemble_gapped(segs).unwrap();
        let init = estimate_poles(&g, &pipe.pencil_options()).unwrap();
        refine_global(&g, &init, 50).unwrap().fit_residual
    };
    let clean = fit(&segs);
    for seed in 0..4 {
        let mut bad = segs.clone();
        inject_band_phases(&mut bad, seed);
        let spoiled = fit(&bad);
        let db = 20.0 * (spoiled / clean).log10();
        assert!(db >= 20.0, "seed {seed}: {db} dB");
    }
}

#[test]
fn mainlobe_narrows_with_bandwidth() {
    let cfg = RadarConfig::<f64>::standard();
    let rec = dechirp_synthesize(&scene(&[2.0], &[1.0]), &cfg, 0).unwrap();
    let bank = SubbandFilterBank::new(&cfg).unwrap();
    let mut widths: Vec<f64> = (1..=4)
        .map(|l| {
            let slice = bank.extract(&rec, l).unwrap();
            range_profile(&slice, l, &cfg, Window::Rect).unwrap().peak_width(3.0).unwrap()
        })
        .collect();
    for (l, w) in widths.iter().enumerate() {
        let expect = 0.886 * cfg.range_resolution(l + 1);
        assert!((w / expect - 1.0).abs() < 0.05, "l={}: {w} vs {expect}", l + 1);
    }
    let pipe = FusionPipeline::new(&cfg, FusionOptions::default()).unwrap();
    let fused = pipe.profile(&pipe.process(&rec).unwrap()).unwrap().peak_width(3.0).unwrap();
    widths.push(fused);
    assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");
}
