//! 8-bit grayscale renderings of images and landscapes, as PNG or binary PGM.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Minimum maps to 0, maximum to 255.
    Linear,
    /// Clip to the `lo` and `hi` percentiles (0..=100) first.
    Percentile { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub normalization: Normalization,
    /// Output intensity is `n^(1/gamma)` for normalised value `n`.
    pub gamma: f64,
    pub invert: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            normalization: Normalization::Linear,
            gamma: 1.0,
            invert: false,
        }
    }
}

impl RenderOptions {
    /// Percentile clip (1, 99), the default for event maps.
    pub fn for_maps() -> Self {
        RenderOptions {
            normalization: Normalization::Percentile { lo: 1.0, hi: 99.0 },
            ..RenderOptions::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Contract(format!("gamma must be positive, got {}", self.gamma)));
        }
        if let Normalization::Percentile { lo, hi } = self.normalization {
            if !(0.0 <= lo && lo < hi && hi <= 100.0) {
                return Err(Error::Contract(format!(
                    "percentiles must satisfy 0 <= lo < hi <= 100, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Row-major grid of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::Contract(format!(
                "grid {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Grid { width, height, values })
    }
}

/// Linearly interpolated percentile of sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    let f = pos - i as f64;
    sorted[i] + f * (sorted[j] - sorted[i])
}

/// One byte per grid cell, row-major. Non-finite cells render as 0.
pub fn render_grayscale(grid: &Grid, options: &RenderOptions) -> Result<Vec<u8>> {
    options.validate()?;
    let mut finite: Vec<f64> = grid.values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Ok(vec![0; grid.values.len()]);
    }
    finite.sort_by(f64::total_cmp);
    let (lo, hi) = match options.normalization {
        Normalization::Linear => (finite[0], finite[finite.len() - 1]),
        Normalization::Percentile { lo, hi } => (percentile(&finite, lo), percentile(&finite, hi)),
    };
    if hi <= lo {
        return Ok(vec![128; grid.values.len()]);
    }
    let inv_gamma = 1.0 / options.gamma;
    Ok(grid
        .values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                return 0;
            }
            let mut n = ((v - lo) / (hi - lo)).clamp(0.0, 1.0).powf(inv_gamma);
            if options.invert {
                n = 1.0 - n;
            }
            (n * 255.0).round() as u8
        })
        .collect())
}

pub fn encode_png(width: usize, height: usize, gray: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Io(e.to_string()))?;
        writer.write_image_data(gray).map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(out)
}

pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    out
}

pub fn render_png(grid: &Grid, options: &RenderOptions) -> Result<Vec<u8>> {
    encode_png(grid.width, grid.height, &render_grayscale(grid, options)?)
}

pub fn render_pgm(grid: &Grid, options: &RenderOptions) -> Result<Vec<u8>> {
    Ok(encode_pgm(grid.width, grid.height, &render_grayscale(grid, options)?))
}
