//! Continuous model of dense uniform noise under a shear warp.
//!
//! Noise is a solid block of unit density over normalised sensor coordinates
//! `p in [0,1]^d` and normalised time `tau in [0,1]`. Warping by a normalised
//! shear `s = v * delta / w` moves a sample to `p + s * tau` (after shifting so
//! the warped support starts at zero). The height of the sheared block at a
//! canvas point `q` is `c` times its *exposure*: the fraction of the time
//! window during which the scene point `q` was inside the field of view,
//!
//! ```text
//! exposure(q) = min(1, q_x/s_x, q_y/s_y) - max(0, (q_x-1)/s_x, (q_y-1)/s_y)
//! ```
//!
//! Every piecewise case of the trapezoid (1D) and the seven-faced polyhedron
//! (2D) is one choice of active term in the `min` and the `max`. The correction
//! factor that flattens the height back to `c` is `1 / exposure`.
//!
//! Shears are signed. A negative component is handled by reflecting the
//! normalised coordinate on that axis, `p -> (1 + |s|) - p`, which maps every
//! sign quadrant onto the positive one.

use crate::error::{Error, Result};
use crate::events::SensorGeometry;
use crate::warp::Velocity;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedShear1D {
    pub s: f64,
    pub c: f64,
}

impl NormalizedShear1D {
    pub fn new(s: f64, c: f64) -> Result<Self> {
        if !s.is_finite() || !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("invalid 1D shear s={s}, c={c}")));
        }
        Ok(NormalizedShear1D { s, c })
    }

    pub fn height(&self, p: f64) -> Result<f64> {
        height_1d(p, self.s, self.c)
    }

    pub fn alpha(&self, p: f64) -> Option<f64> {
        alpha_1d(p, self.s)
    }

    pub fn mean(&self) -> f64 {
        mean_1d(self.s, self.c)
    }

    pub fn variance(&self) -> f64 {
        variance_1d(self.s, self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedShear2D {
    pub sx: f64,
    pub sy: f64,
    pub c: f64,
}

impl NormalizedShear2D {
    pub fn new(sx: f64, sy: f64, c: f64) -> Result<Self> {
        if !sx.is_finite() || !sy.is_finite() || !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!(
                "invalid 2D shear sx={sx}, sy={sy}, c={c}"
            )));
        }
        Ok(NormalizedShear2D { sx, sy, c })
    }

    /// `s_x = v_x * delta / w`, `s_y = v_y * delta / h`.
    pub fn from_velocity(theta: Velocity, delta: f64, geometry: SensorGeometry, c: f64) -> Result<Self> {
        Self::new(theta.vx * delta / geometry.w(), theta.vy * delta / geometry.h(), c)
    }

    pub fn height(&self, px: f64, py: f64) -> Option<f64> {
        height_2d(px, py, self.sx, self.sy, self.c)
    }

    pub fn alpha(&self, px: f64, py: f64) -> Option<f64> {
        alpha_2d(px, py, self.sx, self.sy)
    }

    pub fn mean(&self) -> f64 {
        mean_2d(self.sx, self.sy, self.c)
    }

    pub fn variance(&self) -> f64 {
        variance_2d(self.sx, self.sy, self.c)
    }

    /// Normalised area of the region ever seen by the sensor,
    /// `(1+|s_x|)(1+|s_y|) - |s_x s_y|`.
    pub fn support_area(&self) -> f64 {
        1.0 + self.sx.abs() + self.sy.abs()
    }
}

/// Signed difference between the latest entry and the earliest exit of the
/// time window, for a positive-quadrant point. Negative inside the
/// never-in-view corner triangles.
#[inline]
pub(crate) fn raw_exposure(qx: f64, qy: f64, sx: f64, sy: f64) -> f64 {
    let mut hi = 1.0_f64;
    let mut lo = 0.0_f64;
    for (q, s) in [(qx, sx), (qy, sy)] {
        if s > 0.0 {
            hi = hi.min(q / s);
            lo = lo.max((q - 1.0) / s);
        } else if !(0.0..=1.0).contains(&q) {
            return -1.0;
        }
    }
    hi - lo
}

#[inline]
fn reflect(p: f64, s: f64) -> f64 {
    if s < 0.0 {
        (1.0 - s) - p
    } else {
        p
    }
}

/// Fraction of the window during which the canvas point `(px, py)` was seen.
/// Zero outside the support. Accepts signed shears.
#[inline]
pub fn exposure_2d(px: f64, py: f64, sx: f64, sy: f64) -> f64 {
    raw_exposure(reflect(px, sx), reflect(py, sy), sx.abs(), sy.abs()).max(0.0)
}

pub fn height_1d(p: f64, s: f64, c: f64) -> Result<f64> {
    let len = 1.0 + s.abs();
    if !(0.0..=len).contains(&p) {
        return Err(Error::Domain(format!(
            "position {p} outside the support [0, {len}] for shear {s}"
        )));
    }
    Ok(c * raw_exposure(reflect(p, s), 0.5, s.abs(), 0.0).max(0.0))
}

pub fn mean_1d(s: f64, c: f64) -> f64 {
    c / (s.abs() + 1.0)
}

pub fn variance_1d(s: f64, c: f64) -> f64 {
    let a = s.abs();
    if a <= 1.0 {
        c * c * a * (2.0 - a) / (3.0 * (a + 1.0).powi(2))
    } else {
        c * c * (2.0 * a - 1.0) / (3.0 * a * a * (a + 1.0).powi(2))
    }
}

/// `None` at the support endpoints (where the factor diverges) and outside.
pub fn alpha_1d(p: f64, s: f64) -> Option<f64> {
    let len = 1.0 + s.abs();
    if !(p > 0.0 && p < len) {
        return None;
    }
    let e = raw_exposure(reflect(p, s), 0.5, s.abs(), 0.0);
    (e > 0.0).then(|| 1.0 / e)
}

/// `None` for points never in the field of view (the two corner triangles)
/// and for points outside the warped bounding box.
pub fn height_2d(px: f64, py: f64, sx: f64, sy: f64, c: f64) -> Option<f64> {
    if !in_box(px, py, sx, sy) {
        return None;
    }
    let e = raw_exposure(reflect(px, sx), reflect(py, sy), sx.abs(), sy.abs());
    (e >= 0.0).then_some(c * e)
}

pub fn mean_2d(sx: f64, sy: f64, c: f64) -> f64 {
    c / (sx.abs() + sy.abs() + 1.0)
}

pub fn variance_2d(sx: f64, sy: f64, c: f64) -> f64 {
    let (a, b) = (sx.abs(), sy.abs());
    let (big, small) = if a >= b { (a, b) } else { (b, a) };
    let c2 = c * c;
    if big <= 1.0 {
        let qx = -2.0 * a * a + 4.0 * a;
        let qy = -2.0 * b * b + 4.0 * b;
        c2 * (a * a * b + a * b * b - 3.0 * a * b + qx + qy) / (6.0 * (a + b + 1.0).powi(2))
    } else {
        let (x, y) = (big, small);
        c2 * (4.0 * x * x * y + 4.0 * x * x - 2.0 * x * y * y - 3.0 * x * y - 2.0 * x + y * y + y)
            / (6.0 * x.powi(3) * (x + y + 1.0).powi(2))
    }
}

/// Multiplicative correction at `(px, py)`; `alpha_2d * height_2d == c`
/// wherever the point has positive exposure.
pub fn alpha_2d(px: f64, py: f64, sx: f64, sy: f64) -> Option<f64> {
    if !in_box(px, py, sx, sy) {
        return None;
    }
    let e = raw_exposure(reflect(px, sx), reflect(py, sy), sx.abs(), sy.abs());
    (e > 0.0).then(|| 1.0 / e)
}

fn in_box(px: f64, py: f64, sx: f64, sy: f64) -> bool {
    (0.0..=1.0 + sx.abs()).contains(&px) && (0.0..=1.0 + sy.abs()).contains(&py)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn height_1d_examples() {
        assert!((height_1d(0.5, 0.2, 1.0).unwrap() - 1.0).abs() < EPS);
        assert!((height_1d(0.1, 0.2, 1.0).unwrap() - 0.5).abs() < EPS);
        assert!((height_1d(1.5, 2.0, 1.0).unwrap() - 0.5).abs() < EPS);
        assert!(height_1d(1.3, 0.2, 1.0).is_err());
        assert!(height_1d(-0.01, 0.2, 1.0).is_err());
    }

    #[test]
    fn variance_1d_examples() {
        assert_eq!(variance_1d(0.0, 3.0), 0.0);
        assert!((variance_1d(0.5, 1.0) - 1.0 / 9.0).abs() < EPS);
        assert!((variance_1d(1.0, 1.0) - 1.0 / 12.0).abs() < EPS);
        // both branches agree at the regime boundary
        let below = variance_1d(1.0 - 1e-12, 1.0);
        let above = variance_1d(1.0 + 1e-12, 1.0);
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn mean_1d_examples() {
        assert_eq!(mean_1d(0.0, 1.0), 1.0);
        assert_eq!(mean_1d(1.0, 2.0), 1.0);
        assert_eq!(mean_1d(-1.0, 2.0), 1.0);
    }

    #[test]
    fn alpha_1d_examples() {
        assert!((alpha_1d(0.5, 0.2).unwrap() - 1.0).abs() < EPS);
        assert!((alpha_1d(0.2, 0.2).unwrap() - 1.0).abs() < EPS);
        assert!((alpha_1d(0.1, 0.2).unwrap() - 2.0).abs() < EPS);
        assert!((alpha_1d(0.1, 0.2).unwrap() * height_1d(0.1, 0.2, 1.0).unwrap() - 1.0).abs() < EPS);
        assert!(alpha_1d(0.0, 0.2).is_none());
        assert!(alpha_1d(1.2, 0.2).is_none());
        // large shear plateau factor is s
        assert!((alpha_1d(1.5, 2.0).unwrap() - 2.0).abs() < EPS);
    }

    #[test]
    fn height_2d_examples() {
        assert!((height_2d(0.5, 0.5, 0.2, 0.2, 1.0).unwrap() - 1.0).abs() < EPS);
        assert!((height_2d(0.05, 0.5, 0.2, 0.0, 1.0).unwrap() - 0.25).abs() < EPS);
        for i in 0..=120 {
            let p = i as f64 * 0.01;
            let h2 = height_2d(p, 0.5, 0.2, 0.0, 1.3).unwrap();
            let h1 = height_1d(p, 0.2, 1.3).unwrap();
            assert!((h1 - h2).abs() < EPS, "p={p}");
        }
        // never-in-view corner (x beyond the sensor, y before the shear reaches it)
        assert!(height_2d(1.4, 0.05, 0.5, 0.5, 1.0).is_none());
        assert!(height_2d(0.05, 1.4, 0.5, 0.5, 1.0).is_none());
        assert!(height_2d(1.6, 0.5, 0.5, 0.5, 1.0).is_none());
    }

    #[test]
    fn mean_2d_examples() {
        assert_eq!(mean_2d(0.0, 0.0, 1.0), 1.0);
        assert_eq!(mean_2d(0.5, 0.5, 1.0), 0.5);
        assert_eq!(mean_2d(0.3, 1.7, 2.0), mean_2d(1.7, 0.3, 2.0));
    }

    #[test]
    fn variance_2d_examples() {
        assert_eq!(variance_2d(0.0, 0.0, 1.0), 0.0);
        assert!((variance_2d(0.5, 0.5, 1.0) - 2.5 / 24.0).abs() < EPS);
        for i in 1..=10 {
            let s = i as f64 * 0.1;
            assert!((variance_2d(s, 0.0, 1.7) - variance_1d(s, 1.7)).abs() < EPS);
        }
    }

    #[test]
    fn alpha_2d_examples() {
        assert!((alpha_2d(0.5, 0.5, 0.2, 0.2).unwrap() - 1.0).abs() < EPS);
        assert!((alpha_2d(0.05, 0.5, 0.2, 0.0).unwrap() - 4.0).abs() < EPS);
        let left = alpha_2d(0.2 - 1e-10, 0.5, 0.2, 0.2).unwrap();
        let right = alpha_2d(0.2 + 1e-10, 0.5, 0.2, 0.2).unwrap();
        assert!((left - 1.0).abs() < 1e-9 && (right - 1.0).abs() < 1e-9);
        assert!(alpha_2d(1.4, 0.05, 0.5, 0.5).is_none());
    }

    #[test]
    fn sign_quadrants_reflect() {
        // same-sign shears share a shape; opposite signs mirror one axis
        let (px, py) = (0.3, 0.1);
        let pos = height_2d(px, py, 0.5, 0.4, 1.0).unwrap();
        let neg = height_2d(1.5 - px, 1.4 - py, -0.5, -0.4, 1.0).unwrap();
        assert!((pos - neg).abs() < EPS);
        let mixed = height_2d(px, 1.4 - py, 0.5, -0.4, 1.0).unwrap();
        assert!((pos - mixed).abs() < EPS);
    }
}
