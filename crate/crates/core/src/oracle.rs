//! Closed-form noise model against simulated uniform noise.

use crate::analytic::{variance_1d, variance_2d};
use crate::correction::CorrectionOptions;
use crate::events::{EventStream, SensorGeometry};
use crate::pipeline::Pipeline;
use crate::sim::{gen_uniform_noise, NoiseSpec};
use crate::warp::Velocity;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Noise events in the 2D simulation.
    pub events: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            events: 20_000_000,
            seed: 1,
        }
    }
}

/// Raw and corrected contrast of one stream at each normalised shear.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearSample {
    pub sx: f64,
    pub sy: f64,
    pub raw: f64,
    pub corrected: f64,
}

pub fn shear_sweep(stream: &EventStream, shears: &[(f64, f64)], correction: CorrectionOptions) -> Vec<ShearSample> {
    let g = stream.geometry();
    let delta = stream.time_extent().delta;
    let velocity = |sx: f64, sy: f64| {
        if delta > 0.0 {
            Velocity::new(sx * g.w() / delta, sy * g.h() / delta)
        } else {
            Velocity::ZERO
        }
    };
    let raw_p = Pipeline {
        correction,
        ..Pipeline::raw()
    };
    let cor_p = Pipeline {
        correction,
        ..Pipeline::corrected()
    };
    let mut raw = raw_p.evaluator(stream);
    let raw_values: Vec<f64> = shears.iter().map(|&(sx, sy)| raw.objective(velocity(sx, sy))).collect();
    drop(raw);
    let mut cor = cor_p.evaluator(stream);
    shears
        .iter()
        .zip(raw_values)
        .map(|(&(sx, sy), r)| ShearSample {
            sx,
            sy,
            raw: r,
            corrected: cor.objective(velocity(sx, sy)),
        })
        .collect()
}

/// Least-squares scale `k` minimising `sum (k * measured - model)^2`.
pub fn fit_scale(measured: &[f64], model: &[f64]) -> f64 {
    let num: f64 = measured.iter().zip(model).map(|(m, a)| m * a).sum();
    let den: f64 = measured.iter().map(|m| m * m).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn grid_2d() -> Vec<(f64, f64)> {
    let axis: Vec<f64> = (0..=6).map(|i| 0.25 * i as f64).collect();
    axis.iter().flat_map(|&sx| axis.iter().map(move |&sy| (sx, sy))).collect()
}

pub fn run_checks(options: &OracleOptions) -> Vec<Check> {
    let mut checks = Vec::new();

    let g = SensorGeometry::new(50, 50).expect("non-zero size");
    let delta = 10.0;
    let spec = NoiseSpec::new(options.events as f64 / delta, delta, g, options.seed)
        .expect("valid rate")
        .exact();
    let stream = gen_uniform_noise(&spec);
    let shears = grid_2d();
    let samples = shear_sweep(&stream, &shears, CorrectionOptions::default());
    let model: Vec<f64> = shears.iter().map(|&(a, b)| variance_2d(a, b, 1.0)).collect();
    let raw: Vec<f64> = samples.iter().map(|s| s.raw).collect();
    let k = fit_scale(&raw, &model);
    let model_max = model.iter().copied().fold(0.0, f64::max);
    let worst = samples
        .iter()
        .zip(&model)
        .map(|(s, &m)| {
            let err = (k * s.raw - m).abs();
            if m > 0.0 {
                err / m
            } else {
                err / model_max
            }
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "variance_2d_vs_simulation",
        passed: worst <= 0.05,
        detail: format!("{} events, worst relative error {worst:.4} (limit 0.05)", stream.len()),
    });

    let raw_max = raw.iter().copied().fold(0.0, f64::max);
    let flat = samples.iter().map(|s| s.corrected / raw_max).fold(0.0, f64::max);
    checks.push(Check {
        name: "corrected_noise_flat",
        passed: flat <= 0.02,
        detail: format!("largest corrected / peak raw contrast {flat:.4} (limit 0.02)"),
    });
    drop(stream);

    let (s_best, v_best) = (0..=3000)
        .map(|i| i as f64 * 5e-4)
        .map(|s| (s, variance_1d(s, 1.0)))
        .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    checks.push(Check {
        name: "variance_1d_peak",
        passed: (s_best - 0.5).abs() < 1e-9 && (v_best - 1.0 / 9.0).abs() <= 1e-12,
        detail: format!("peak at s={s_best}, value {v_best:.15}"),
    });

    // whole-pixel shifts at every grid shear; statistics over the full support
    let g1 = SensorGeometry::new(100, 1).expect("non-zero size");
    let spec1 = NoiseSpec::new(1e6 / delta, delta, g1, options.seed.wrapping_add(1))
        .expect("valid rate")
        .exact();
    let stream1 = gen_uniform_noise(&spec1);
    let step = 0.05;
    let shears1: Vec<(f64, f64)> = (0..=30).map(|i| (i as f64 * step, 0.0)).collect();
    let samples1 = shear_sweep(&stream1, &shears1, CorrectionOptions { eta: 0.0, clamp: None });
    let best1 = samples1
        .iter()
        .max_by(|a, b| a.raw.total_cmp(&b.raw))
        .map(|s| s.sx)
        .unwrap_or(f64::NAN);
    checks.push(Check {
        name: "simulated_1d_peak",
        passed: (best1 - 0.5).abs() <= step + 1e-12,
        detail: format!("discrete peak at s={best1:.2} (grid step {step})"),
    });

    let worst_reduction = (1..=10)
        .map(|i| {
            let s = 0.1 * i as f64;
            (variance_2d(s, 0.0, 1.0) - variance_1d(s, 1.0)).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "reduction_to_1d",
        passed: worst_reduction <= 1e-12,
        detail: format!("largest difference {worst_reduction:.3e}"),
    });

    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_scale_recovers_factor() {
        assert!((fit_scale(&[1.0, 2.0, 3.0], &[0.5, 1.0, 1.5]) - 0.5).abs() < 1e-15);
        assert_eq!(fit_scale(&[0.0], &[1.0]), 0.0);
    }

    #[test]
    fn grid_has_49_points() {
        let g = grid_2d();
        assert_eq!(g.len(), 49);
        assert_eq!(g[48], (1.5, 1.5));
    }

    #[test]
    fn small_run_produces_every_check() {
        let checks = run_checks(&OracleOptions { events: 20_000, seed: 3 });
        let names: Vec<_> = checks.iter().map(|c| c.name).collect();
        assert_eq!(
            names,
            [
                "variance_2d_vs_simulation",
                "corrected_noise_flat",
                "variance_1d_peak",
                "simulated_1d_peak",
                "reduction_to_1d"
            ]
        );
        assert!(checks[2].passed && checks[4].passed);
    }
}
