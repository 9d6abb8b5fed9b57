//! Artifact writers. Everything goes through here so that file order and
//! number formatting stay fixed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mbradar::imaging::IsarImage;
use serde::Serialize;

use crate::error::CliError;

/// Display floor of PGM images, dB below the image maximum.
pub const PGM_FLOOR_DB: f64 = 40.0;

/// Collects the files written during one run, relative to its directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: vec![] })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
        let path = self.path(name);
        let io = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        for r in rows {
            w.serialize(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    /// Range/cross-range grid: first row holds the range axis, first
    /// column the cross-range axis.
    pub fn image_csv(&mut self, name: &str, img: &IsarImage) -> Result<(), CliError> {
        let path = self.path(name);
        let io = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        let corner = if img.crossrange_is_doppler { "doppler_hz\\range_m" } else { "crossrange_m\\range_m" };
        let mut head = vec![corner.to_string()];
        head.extend(img.range_axis.iter().map(|r| r.to_string()));
        w.write_record(&head).map_err(io)?;
        for (a, x) in img.crossrange_axis.iter().enumerate() {
            let mut rec = vec![x.to_string()];
            rec.extend((0..img.n_range()).map(|b| img.at(a, b).to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    /// 8-bit binary PGM, log-scaled with a fixed floor. Top row is the
    /// largest cross-range.
    pub fn pgm(&mut self, name: &str, img: &IsarImage) -> Result<(), CliError> {
        let path = self.path(name);
        let bytes = pgm_bytes(img, PGM_FLOOR_DB);
        let mut f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f.write_all(&bytes).map_err(|e| CliError::io(&path, e))
    }
}

pub fn pgm_bytes(img: &IsarImage, floor_db: f64) -> Vec<u8> {
    let (w, h) = (img.n_range(), img.n_cross());
    let peak = img.max();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for a in (0..h).rev() {
        for b in 0..w {
            let v = img.at(a, b);
            let db = if peak > 0.0 && v > 0.0 { 10.0 * (v / peak).log10() } else { -floor_db };
            let level = ((db + floor_db) / floor_db).clamp(0.0, 1.0);
            out.push((level * 255.0).round() as u8);
        }
    }
    out
}

/// `20 log10(v / peak)`, clamped so that zero stays representable.
pub fn level_db(v: f64, peak: f64) -> f64 {
    if v > 0.0 && peak > 0.0 {
        (20.0 * (v / peak).log10()).max(-300.0)
    } else {
        -300.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_scale() {
        let img = IsarImage {
            range_axis: vec![0.0, 1.0],
            crossrange_axis: vec![-1.0, 1.0],
            crossrange_is_doppler: false,
            intensity: vec![1.0, 1e-2, 1e-5, 0.0],
            wavelength: 1.0,
        };
        let b = pgm_bytes(&img, 40.0);
        let head = b"P5\n2 2\n255\n";
        assert_eq!(&b[..head.len()], head);
        // top row is the upper cross-range row
        assert_eq!(&b[head.len()..], &[0, 0, 255, 128]);
    }

    #[test]
    fn level_db_clamps() {
        assert_eq!(level_db(0.0, 1.0), -300.0);
        assert!((level_db(0.5, 1.0) + 6.0206).abs() < 1e-4);
    }
}
