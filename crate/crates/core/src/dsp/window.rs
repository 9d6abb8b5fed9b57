use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Spectral weighting window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    Rect,
    Hann,
    /// 4-term Blackman-Harris, about -92 dB sidelobes.
    BlackmanHarris,
}

impl Window {
    /// Symmetric window of length `n`.
    pub fn coefficients<T: Real>(self, n: usize) -> Vec<T> {
        if n <= 1 {
            return vec![T::one(); n];
        }
        let denom = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let x = 2.0 * std::f64::consts::PI * i as f64 / denom;
                let w = match self {
                    Window::Rect => 1.0,
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::BlackmanHarris => {
                        0.35875 - 0.48829 * x.cos() + 0.14128 * (2.0 * x).cos() - 0.01168 * (3.0 * x).cos()
                    }
                };
                T::lit(w)
            })
            .collect()
    }

    /// -3 dB mainlobe width in DFT bins of the unpadded aperture.
    pub fn mainlobe_width_bins(self) -> f64 {
        match self {
            Window::Rect => 0.886,
            Window::Hann => 1.44,
            Window::BlackmanHarris => 1.90,
        }
    }

    /// Highest sidelobe level relative to the mainlobe peak, dB.
    pub fn peak_sidelobe_db(self) -> f64 {
        match self {
            Window::Rect => -13.26,
            Window::Hann => -31.47,
            Window::BlackmanHarris => -92.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Rect => "rect",
            Window::Hann => "hann",
            Window::BlackmanHarris => "blackman-harris",
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" | "none" => Ok(Window::Rect),
            "hann" | "hanning" => Ok(Window::Hann),
            "blackman-harris" | "blackmanharris" => Ok(Window::BlackmanHarris),
            other => Err(format!("unknown window '{other}' (expected rect, hann or blackman-harris)")),
        }
    }
}
