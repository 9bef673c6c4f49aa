//! Per-pixel correction field over a warped-image canvas.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::events::SensorGeometry;
use crate::warp::{CanvasLayout, Velocity, WarpedImage};

pub const DEFAULT_ETA: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionOptions {
    /// Pixels whose exposure (fraction of the window spent in view) is below
    /// `eta` are masked out.
    pub eta: f64,
    /// Optional upper bound on the correction factor.
    pub clamp: Option<f64>,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        CorrectionOptions {
            eta: DEFAULT_ETA,
            clamp: None,
        }
    }
}

/// Maps canvas pixels to normalised model coordinates for one candidate.
///
/// Pixel `(i, j)` is sampled at its centre. The canvas shift is
/// `ceil(max(0, v * delta))`; the fractional part of that rounding is removed
/// so the model coordinate runs over `[0, 1 + |s|]`.
#[derive(Debug, Clone, Copy)]
pub struct FieldGeometry {
    pub layout: CanvasLayout,
    pub sx: f64,
    pub sy: f64,
    w: f64,
    h: f64,
    pad_x: f64,
    pad_y: f64,
    options: CorrectionOptions,
}

impl FieldGeometry {
    pub fn new(geometry: SensorGeometry, theta: Velocity, delta: f64, options: CorrectionOptions) -> Self {
        let layout = CanvasLayout::new(geometry, theta, delta);
        Self::with_layout(geometry, theta, delta, layout, options)
    }

    pub fn with_layout(
        geometry: SensorGeometry,
        theta: Velocity,
        delta: f64,
        layout: CanvasLayout,
        options: CorrectionOptions,
    ) -> Self {
        let (w, h) = (geometry.w(), geometry.h());
        FieldGeometry {
            layout,
            sx: theta.vx * delta / w,
            sy: theta.vy * delta / h,
            w,
            h,
            pad_x: layout.offset_x as f64 - (theta.vx * delta).max(0.0),
            pad_y: layout.offset_y as f64 - (theta.vy * delta).max(0.0),
            options,
        }
    }

    #[inline]
    pub fn model_x(&self, col: usize) -> f64 {
        (col as f64 + 0.5 - self.pad_x) / self.w
    }

    #[inline]
    pub fn model_y(&self, row: usize) -> f64 {
        (row as f64 + 0.5 - self.pad_y) / self.h
    }

    /// Entry/exit bounds contributed by column `col`.
    #[inline]
    pub fn col_bounds(&self, col: usize) -> AxisBounds {
        AxisBounds::new(self.model_x(col), self.sx)
    }

    #[inline]
    pub fn row_bounds(&self, row: usize) -> AxisBounds {
        AxisBounds::new(self.model_y(row), self.sy)
    }

    #[inline]
    pub fn exposure(&self, col: usize, row: usize) -> f64 {
        self.col_bounds(col).exposure(self.row_bounds(row))
    }

    #[inline]
    fn admits(&self, exposure: f64) -> bool {
        exposure > 0.0 && exposure >= self.options.eta
    }

    #[inline]
    pub fn is_valid(&self, col: usize, row: usize) -> bool {
        self.admits(self.exposure(col, row))
    }

    /// Correction factor, or `None` for masked pixels.
    #[inline]
    pub fn factor(&self, col: usize, row: usize) -> Option<f64> {
        self.factor_for(self.exposure(col, row))
    }

    #[inline]
    pub fn factor_for(&self, exposure: f64) -> Option<f64> {
        if !self.admits(exposure) {
            return None;
        }
        let alpha = 1.0 / exposure;
        Some(match self.options.clamp {
            Some(max) => alpha.min(max),
            None => alpha,
        })
    }

    #[inline]
    pub fn admits_exposure(&self, exposure: f64) -> bool {
        self.admits(exposure)
    }

    /// Columns of `row` inside the mask. The valid set of a row is an
    /// interval because exposure is concave along any line.
    pub fn row_range(&self, row: usize) -> Range<usize> {
        let cw = self.layout.width;
        let Some((lo, hi)) = self.row_interval_model(row) else {
            return 0..0;
        };
        let to_col = |q: f64| q * self.w - 0.5 + self.pad_x;
        let mut start = to_col(lo).ceil().clamp(0.0, cw as f64) as usize;
        let mut end = (to_col(hi).floor() + 1.0).clamp(0.0, cw as f64) as usize;
        if start >= end {
            // the analytic bound may be off by a rounding step
            let mid = to_col(0.5 * (lo + hi)).round().clamp(0.0, (cw - 1) as f64) as usize;
            if !self.is_valid(mid, row) {
                return 0..0;
            }
            start = mid;
            end = mid + 1;
        }
        while start > 0 && self.is_valid(start - 1, row) {
            start -= 1;
        }
        while start < end && !self.is_valid(start, row) {
            start += 1;
        }
        while end < cw && self.is_valid(end, row) {
            end += 1;
        }
        while end > start && !self.is_valid(end - 1, row) {
            end -= 1;
        }
        start..end
    }

    /// Admissible `q_x` interval for the row, from the pairwise
    /// upper-minus-lower constraints of the exposure envelope.
    fn row_interval_model(&self, row: usize) -> Option<(f64, f64)> {
        let eta = self.options.eta.max(1e-15);
        let (a, b) = (self.sx.abs(), self.sy.abs());
        let mut qy = self.model_y(row);
        if self.sy < 0.0 {
            qy = (1.0 + b) - qy;
        }
        let (y_hi, y_lo) = if b > 0.0 {
            (qy / b, (qy - 1.0) / b)
        } else if (0.0..=1.0).contains(&qy) {
            (f64::INFINITY, f64::NEG_INFINITY)
        } else {
            return None;
        };
        let upper = y_hi.min(1.0);
        let lower = y_lo.max(0.0);
        if upper - lower < eta {
            return None;
        }
        let (lo, hi) = if a > 0.0 {
            if 1.0 / a < eta {
                return None;
            }
            (a * (eta + lower), 1.0 + a * (upper - eta))
        } else {
            (0.0, 1.0)
        };
        if lo > hi {
            return None;
        }
        Some(if self.sx < 0.0 {
            ((1.0 + a) - hi, (1.0 + a) - lo)
        } else {
            (lo, hi)
        })
    }

    pub fn valid_count(&self) -> usize {
        (0..self.layout.height).map(|r| self.row_range(r).len()).sum()
    }
}

/// Window fractions at which one canvas coordinate enters (`enter`) and
/// leaves (`leave`) the sensor's field of view, in units of the window.
/// Exposure of a pixel is the overlap of its column and row intervals
/// intersected with `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBounds {
    pub enter: f64,
    pub leave: f64,
}

impl AxisBounds {
    #[inline]
    pub fn new(q: f64, s: f64) -> Self {
        let a = s.abs();
        let q = if s < 0.0 { (1.0 + a) - q } else { q };
        if a > 0.0 {
            AxisBounds {
                enter: (q - 1.0) / a,
                leave: q / a,
            }
        } else if (0.0..=1.0).contains(&q) {
            AxisBounds {
                enter: f64::NEG_INFINITY,
                leave: f64::INFINITY,
            }
        } else {
            AxisBounds {
                enter: f64::INFINITY,
                leave: f64::NEG_INFINITY,
            }
        }
    }

    /// Clamped to zero, like the analytic exposure.
    #[inline]
    pub fn exposure(self, other: AxisBounds) -> f64 {
        let hi = self.leave.min(other.leave).min(1.0);
        let lo = self.enter.max(other.enter).max(0.0);
        (hi - lo).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionField {
    /// Row-major correction factors; 0 on masked pixels.
    pub factors: Vec<f64>,
    /// `true` where the pixel belongs to the valid domain.
    pub mask: Vec<bool>,
    pub layout: CanvasLayout,
    pub theta: Velocity,
    pub delta: f64,
    pub geometry: SensorGeometry,
}

impl CorrectionField {
    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedImage {
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub layout: CanvasLayout,
    pub theta: Velocity,
}

pub fn build_correction_field(
    geometry: SensorGeometry,
    theta: Velocity,
    delta: f64,
    layout: CanvasLayout,
    options: CorrectionOptions,
) -> CorrectionField {
    let fg = FieldGeometry::with_layout(geometry, theta, delta, layout, options);
    let mut factors = vec![0.0; layout.len()];
    let mut mask = vec![false; layout.len()];
    for row in 0..layout.height {
        for col in 0..layout.width {
            if let Some(f) = fg.factor(col, row) {
                let idx = row * layout.width + col;
                factors[idx] = f;
                mask[idx] = true;
            }
        }
    }
    CorrectionField {
        factors,
        mask,
        layout,
        theta,
        delta,
        geometry,
    }
}

/// Field matching an accumulated image.
pub fn correction_field_for(image: &WarpedImage, options: CorrectionOptions) -> CorrectionField {
    build_correction_field(image.geometry, image.theta, image.delta, image.layout, options)
}

pub fn apply_correction(image: &WarpedImage, field: &CorrectionField) -> Result<CorrectedImage> {
    if image.layout != field.layout {
        return Err(Error::Contract(format!(
            "image canvas {}x{} does not match correction field {}x{}",
            image.layout.width, image.layout.height, field.layout.width, field.layout.height
        )));
    }
    let values = image
        .values
        .iter()
        .zip(&field.factors)
        .zip(&field.mask)
        .map(|((&v, &f), &m)| if m { v * f } else { 0.0 })
        .collect();
    Ok(CorrectedImage {
        values,
        mask: field.mask.clone(),
        layout: image.layout,
        theta: image.theta,
    })
}
