//! Shear warping of events and accumulation into the Image of Warped Events.

use crate::events::{EventStream, SensorGeometry};

/// Candidate translational velocity in pixels per second.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity { vx: 0.0, vy: 0.0 };

    pub fn new(vx: f64, vy: f64) -> Self {
        Velocity { vx, vy }
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite()
    }

    pub fn distance(&self, other: &Velocity) -> f64 {
        (self.vx - other.vx).hypot(self.vy - other.vy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// Each event adds unit mass to the pixel nearest its warped position.
    #[default]
    Nearest,
    /// Unit mass split over the four surrounding pixels.
    Bilinear,
}

/// `u' = u - theta * (t - t_ref)`, with time converted to seconds.
pub fn warp_events(stream: &EventStream, theta: Velocity, t_ref: u64) -> Vec<Point2> {
    stream
        .events()
        .iter()
        .map(|e| {
            let dt = elapsed_seconds(e.t, t_ref);
            Point2 {
                x: f64::from(e.x) - theta.vx * dt,
                y: f64::from(e.y) - theta.vy * dt,
            }
        })
        .collect()
}

#[inline]
pub(crate) fn elapsed_seconds(t: u64, t_ref: u64) -> f64 {
    if t >= t_ref {
        (t - t_ref) as f64 * 1e-6
    } else {
        -((t_ref - t) as f64 * 1e-6)
    }
}

/// Size of the enlarged canvas and the integer shift that makes every warped
/// coordinate non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanvasLayout {
    pub width: usize,
    pub height: usize,
    pub offset_x: usize,
    pub offset_y: usize,
}

impl CanvasLayout {
    pub fn new(geometry: SensorGeometry, theta: Velocity, delta: f64) -> Self {
        let sweep_x = theta.vx.abs() * delta;
        let sweep_y = theta.vy.abs() * delta;
        CanvasLayout {
            width: (geometry.w() + sweep_x).ceil() as usize,
            height: (geometry.h() + sweep_y).ceil() as usize,
            offset_x: (theta.vx * delta).max(0.0).ceil() as usize,
            offset_y: (theta.vy * delta).max(0.0).ceil() as usize,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The accumulator `H` on the enlarged canvas, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedImage {
    pub values: Vec<f64>,
    pub layout: CanvasLayout,
    pub theta: Velocity,
    pub delta: f64,
    pub geometry: SensorGeometry,
}

impl WarpedImage {
    pub fn width(&self) -> usize {
        self.layout.width
    }

    pub fn height(&self) -> usize {
        self.layout.height
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.layout.width + col]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `f64::floor` without the libm call on baseline x86-64.
#[inline]
pub(crate) fn floor(c: f64) -> f64 {
    if c.is_nan() || c.abs() >= 4.5e15 {
        return c.floor();
    }
    let t = c as i64 as f64;
    if t > c {
        t - 1.0
    } else {
        t
    }
}

pub fn accumulate(
    points: &[Point2],
    geometry: SensorGeometry,
    theta: Velocity,
    delta: f64,
    kernel: Kernel,
) -> WarpedImage {
    let layout = CanvasLayout::new(geometry, theta, delta);
    let mut values = vec![0.0; layout.len()];
    let (ox, oy) = (layout.offset_x as f64, layout.offset_y as f64);
    let (cw, ch) = (layout.width, layout.height);
    match kernel {
        Kernel::Nearest => {
            for p in points {
                // ties round up; truncation is floor on the admitted range
                let col = p.x + ox + 0.5;
                let row = p.y + oy + 0.5;
                if col >= 0.0 && row >= 0.0 && col < cw as f64 && row < ch as f64 {
                    values[row as usize * cw + col as usize] += 1.0;
                } else {
                    debug_assert!(false, "warped point {p:?} outside canvas {layout:?}");
                }
            }
        }
        Kernel::Bilinear => {
            for p in points {
                let (cx, cy) = (p.x + ox, p.y + oy);
                let (fx, fy) = (floor(cx), floor(cy));
                let (ax, ay) = (cx - fx, cy - fy);
                let taps = [
                    (fx, fy, (1.0 - ax) * (1.0 - ay)),
                    (fx + 1.0, fy, ax * (1.0 - ay)),
                    (fx, fy + 1.0, (1.0 - ax) * ay),
                    (fx + 1.0, fy + 1.0, ax * ay),
                ];
                for (col, row, weight) in taps {
                    if weight == 0.0 {
                        continue;
                    }
                    if col >= 0.0 && row >= 0.0 && (col as usize) < cw && (row as usize) < ch {
                        values[row as usize * cw + col as usize] += weight;
                    }
                }
            }
        }
    }
    WarpedImage {
        values,
        layout,
        theta,
        delta,
        geometry,
    }
}

/// Warps and accumulates over the stream's own time extent.
pub fn warped_image(stream: &EventStream, theta: Velocity, kernel: Kernel) -> WarpedImage {
    let extent = stream.time_extent();
    let points = warp_events(stream, theta, extent.t_ref);
    accumulate(&points, stream.geometry(), theta, extent.delta, kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, Polarity};

    fn geom(w: u16, h: u16) -> SensorGeometry {
        SensorGeometry::new(w, h).unwrap()
    }

    #[test]
    fn warp_examples() {
        let g = geom(240, 180);
        let s = EventStream::new(
            vec![
                Event::new(1_000_000, 3, 7, Polarity::On),
                Event::new(3_000_000, 10, 5, Polarity::On),
            ],
            g,
        )
        .unwrap();
        let pts = warp_events(&s, Velocity::new(2.0, 1.0), 1_000_000);
        assert_eq!(pts[0], Point2 { x: 3.0, y: 7.0 });
        assert_eq!(pts[1], Point2 { x: 6.0, y: 3.0 });
        let pts = warp_events(&s, Velocity::ZERO, 0);
        assert_eq!(pts[1], Point2 { x: 10.0, y: 5.0 });
    }

    #[test]
    fn single_event_identity() {
        let g = geom(240, 180);
        let img = accumulate(&[Point2 { x: 12.0, y: 34.0 }], g, Velocity::ZERO, 1.0, Kernel::Nearest);
        assert_eq!((img.width(), img.height()), (240, 180));
        assert_eq!(img.get(12, 34), 1.0);
        assert_eq!(img.total(), 1.0);
    }

    #[test]
    fn canvas_size_formula() {
        let layout = CanvasLayout::new(geom(50, 50), Velocity::new(25.0, 0.0), 1.0);
        assert_eq!((layout.width, layout.height), (75, 50));
        assert_eq!((layout.offset_x, layout.offset_y), (25, 0));
        let layout = CanvasLayout::new(geom(50, 50), Velocity::new(-2.5, 1.2), 2.0);
        assert_eq!((layout.width, layout.height), (55, 53));
        assert_eq!((layout.offset_x, layout.offset_y), (0, 3));
    }

    #[test]
    fn bilinear_splits_mass() {
        let g = geom(4, 4);
        let img = accumulate(&[Point2 { x: 1.25, y: 2.5 }], g, Velocity::ZERO, 0.0, Kernel::Bilinear);
        assert!((img.get(1, 2) - 0.375).abs() < 1e-12);
        assert!((img.get(2, 2) - 0.125).abs() < 1e-12);
        assert!((img.get(1, 3) - 0.375).abs() < 1e-12);
        assert!((img.get(2, 3) - 0.125).abs() < 1e-12);
    }
}
