//! Contrast of a stream at a candidate velocity, with or without correction.
//!
//! [`Pipeline::evaluate_dense`] runs the full warp / accumulate / correct /
//! contrast chain on materialised images. [`Evaluator`] produces the same
//! number without materialising the canvas: only pixels hit by at least one
//! event contribute to the sums, and the size of the valid domain is counted
//! row by row from the analytic mask.

use crate::correction::{
    apply_correction, build_correction_field, AxisBounds, CorrectionOptions, FieldGeometry,
};
use crate::error::{Error, Result};
use crate::events::{EventStream, SensorGeometry};
use crate::objective::{contrast_variance, sparse_variance, ContrastValue};
use crate::warp::{
    accumulate, elapsed_seconds, floor, warp_events, CanvasLayout, Kernel, Velocity,
};

/// Canvases larger than this are accumulated through a sorted key list
/// instead of a dense scratch buffer.
const DENSE_SCRATCH_LIMIT: usize = 1 << 23;

const TIME_SLICES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pipeline {
    /// Multiply the image by the correction field before measuring contrast.
    pub corrected: bool,
    pub kernel: Kernel,
    pub correction: CorrectionOptions,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline {
            corrected: true,
            kernel: Kernel::Nearest,
            correction: CorrectionOptions::default(),
        }
    }
}

impl Pipeline {
    pub fn raw() -> Self {
        Pipeline {
            corrected: false,
            ..Pipeline::default()
        }
    }

    pub fn corrected() -> Self {
        Pipeline::default()
    }

    pub fn evaluate_dense(&self, stream: &EventStream, theta: Velocity) -> Result<ContrastValue> {
        let extent = stream.time_extent();
        let points = warp_events(stream, theta, extent.t_ref);
        let image = accumulate(&points, stream.geometry(), theta, extent.delta, self.kernel);
        let field = build_correction_field(
            stream.geometry(),
            theta,
            extent.delta,
            image.layout,
            self.correction,
        );
        if self.corrected {
            let corrected = apply_correction(&image, &field)?;
            contrast_variance(&corrected.values, &corrected.mask)
        } else {
            contrast_variance(&image.values, &field.mask)
        }
    }

    pub fn evaluator<'a>(&self, stream: &'a EventStream) -> Evaluator<'a> {
        Evaluator::new(stream, *self)
    }
}

/// Reusable contrast evaluator over one stream. Not `Sync`; give each worker
/// its own (they are cheap to clone).
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    stream: &'a EventStream,
    pipeline: Pipeline,
    geometry: SensorGeometry,
    delta: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    dts: Vec<f64>,
    scratch: Vec<f64>,
    touched: Vec<(u32, u32)>,
    col_bounds: Vec<AxisBounds>,
    row_bounds: Vec<AxisBounds>,
    keyed: Vec<(u64, f64)>,
    nonzero: Vec<f64>,
    dense_limit: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(stream: &'a EventStream, pipeline: Pipeline) -> Self {
        let extent = stream.time_extent();
        let events = stream.events();
        // Visit events in short time slices, raster order within a slice, so
        // consecutive deposits land close together on the canvas.
        let slice = |dt: f64| {
            if extent.delta > 0.0 {
                ((dt / extent.delta) * TIME_SLICES as f64).min((TIME_SLICES - 1) as f64) as u32
            } else {
                0
            }
        };
        let mut order: Vec<(u32, u16, u16, f64)> = events
            .iter()
            .map(|e| {
                let dt = elapsed_seconds(e.t, extent.t_ref);
                (slice(dt), e.y, e.x, dt)
            })
            .collect();
        order.sort_unstable_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)).then(a.3.total_cmp(&b.3)));
        Evaluator {
            stream,
            pipeline,
            geometry: stream.geometry(),
            delta: extent.delta,
            xs: order.iter().map(|o| f64::from(o.2)).collect(),
            ys: order.iter().map(|o| f64::from(o.1)).collect(),
            dts: order.iter().map(|o| o.3).collect(),
            scratch: Vec::new(),
            touched: Vec::new(),
            col_bounds: Vec::new(),
            row_bounds: Vec::new(),
            keyed: Vec::new(),
            nonzero: Vec::new(),
            dense_limit: DENSE_SCRATCH_LIMIT,
        }
    }

    pub fn stream(&self) -> &'a EventStream {
        self.stream
    }

    pub fn pipeline(&self) -> Pipeline {
        self.pipeline
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Contrast at `theta`; errors only when the valid domain is empty.
    pub fn contrast(&mut self, theta: Velocity) -> Result<ContrastValue> {
        let layout = CanvasLayout::new(self.geometry, theta, self.delta);
        let fg = FieldGeometry::with_layout(
            self.geometry,
            theta,
            self.delta,
            layout,
            self.pipeline.correction,
        );
        self.nonzero.clear();
        self.col_bounds.clear();
        self.col_bounds.extend((0..layout.width).map(|c| fg.col_bounds(c)));
        self.row_bounds.clear();
        self.row_bounds.extend((0..layout.height).map(|r| fg.row_bounds(r)));
        let corrected = self.pipeline.corrected;
        if layout.len() <= self.dense_limit {
            self.accumulate_dense(theta, layout);
            let cw = layout.width;
            for &(col, row) in &self.touched {
                let (col, row) = (col as usize, row as usize);
                let mass = std::mem::take(&mut self.scratch[row * cw + col]);
                let e = self.col_bounds[col].exposure(self.row_bounds[row]);
                if let Some(v) = weigh(&fg, corrected, e, mass) {
                    self.nonzero.push(v);
                }
            }
            self.touched.clear();
        } else {
            self.accumulate_keyed(theta, layout);
            let cw = layout.width as u64;
            let mut i = 0;
            while i < self.keyed.len() {
                let key = self.keyed[i].0;
                let mut mass = 0.0;
                while i < self.keyed.len() && self.keyed[i].0 == key {
                    mass += self.keyed[i].1;
                    i += 1;
                }
                let (col, row) = ((key % cw) as usize, (key / cw) as usize);
                let e = self.col_bounds[col].exposure(self.row_bounds[row]);
                if let Some(v) = weigh(&fg, corrected, e, mass) {
                    self.nonzero.push(v);
                }
            }
            self.keyed.clear();
        }
        sparse_variance(&self.nonzero, fg.valid_count()).ok_or_else(|| {
            Error::Contract(format!(
                "no valid pixels at ({}, {}) with eta {}",
                theta.vx, theta.vy, self.pipeline.correction.eta
            ))
        })
    }

    /// Contrast as a plain number: an empty valid domain scores 0.
    pub fn objective(&mut self, theta: Velocity) -> f64 {
        self.contrast(theta).map(|c| c.value).unwrap_or(0.0)
    }

    fn accumulate_dense(&mut self, theta: Velocity, layout: CanvasLayout) {
        if self.scratch.len() < layout.len() {
            self.scratch.resize(layout.len(), 0.0);
        }
        let cw = layout.width;
        let scratch = &mut self.scratch;
        let touched = &mut self.touched;
        deposits(&self.xs, &self.ys, &self.dts, theta, layout, self.pipeline.kernel, |col, row, w| {
            let idx = row * cw + col;
            if scratch[idx] == 0.0 {
                touched.push((col as u32, row as u32));
            }
            scratch[idx] += w;
        });
    }

    fn accumulate_keyed(&mut self, theta: Velocity, layout: CanvasLayout) {
        let cw = layout.width as u64;
        let keyed = &mut self.keyed;
        deposits(&self.xs, &self.ys, &self.dts, theta, layout, self.pipeline.kernel, |col, row, w| {
            keyed.push((row as u64 * cw + col as u64, w));
        });
        self.keyed.sort_unstable_by_key(|&(k, _)| k);
    }
}

/// Calls `deposit(col, row, weight)` for every on-canvas contribution of the
/// warped events. Index arithmetic matches [`accumulate`].
#[inline]
fn deposits<F: FnMut(usize, usize, f64)>(
    xs: &[f64],
    ys: &[f64],
    dts: &[f64],
    theta: Velocity,
    layout: CanvasLayout,
    kernel: Kernel,
    mut deposit: F,
) {
    let (ox, oy) = (layout.offset_x as f64, layout.offset_y as f64);
    let (cw, ch) = (layout.width as f64, layout.height as f64);
    let it = xs.iter().zip(ys).zip(dts);
    match kernel {
        Kernel::Nearest => {
            for ((&x, &y), &dt) in it {
                let cx = (x - theta.vx * dt) + ox + 0.5;
                let cy = (y - theta.vy * dt) + oy + 0.5;
                if cx >= 0.0 && cx < cw && cy >= 0.0 && cy < ch {
                    deposit(cx as usize, cy as usize, 1.0);
                }
            }
        }
        Kernel::Bilinear => {
            for ((&x, &y), &dt) in it {
                for (c, r, w) in bilinear_taps((x - theta.vx * dt) + ox, (y - theta.vy * dt) + oy) {
                    if w > 0.0 && c >= 0.0 && c < cw && r >= 0.0 && r < ch {
                        deposit(c as usize, r as usize, w);
                    }
                }
            }
        }
    }
}

#[inline]
fn bilinear_taps(cx: f64, cy: f64) -> [(f64, f64, f64); 4] {
    let (fx, fy) = (floor(cx), floor(cy));
    let (ax, ay) = (cx - fx, cy - fy);
    [
        (fx, fy, (1.0 - ax) * (1.0 - ay)),
        (fx + 1.0, fy, ax * (1.0 - ay)),
        (fx, fy + 1.0, (1.0 - ax) * ay),
        (fx + 1.0, fy + 1.0, ax * ay),
    ]
}

#[inline]
fn weigh(fg: &FieldGeometry, corrected: bool, exposure: f64, mass: f64) -> Option<f64> {
    if corrected {
        fg.factor_for(exposure).map(|f| f * mass)
    } else {
        fg.admits_exposure(exposure).then_some(mass)
    }
}
