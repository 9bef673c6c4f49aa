//! Nelder-Mead search, exhaustive loss landscapes and the multi-start
//! rate-of-convergence harness.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::EventStream;
use crate::pipeline::Pipeline;
use crate::warp::Velocity;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex, px/s.
    pub initial_scale: f64,
    /// Stop once every vertex lies within this distance of the best one.
    pub tol: f64,
    /// Stop once the objective spread across the simplex falls below this.
    pub value_tol: f64,
    pub max_iterations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_scale: 5.0,
            tol: 1e-3,
            value_tol: 1e-9,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationResult {
    pub theta_hat: Velocity,
    pub objective_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimises `objective` starting from `theta0`.
pub fn nelder_mead<F>(mut objective: F, theta0: Velocity, options: &NelderMeadOptions) -> Result<OptimizationResult>
where
    F: FnMut(Velocity) -> f64,
{
    let mut evaluations = 0usize;
    let mut eval = |p: [f64; 2]| -> Result<f64> {
        evaluations += 1;
        let v = objective(Velocity::new(p[0], p[1]));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { value: v, vx: p[0], vy: p[1] })
        }
    };

    let x0 = [theta0.vx, theta0.vy];
    let h = options.initial_scale;
    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    for p in [x0, [x0[0] + h, x0[1]], [x0[0], x0[1] + h]] {
        let v = eval(p)?;
        simplex.push((p, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| dist(*p, best.0))
            .fold(0.0, f64::max);
        let spread = simplex[2].1 - best.1;
        if diameter < options.tol || spread < options.value_tol {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        iterations += 1;

        let worst = simplex[2];
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let along = |t: f64, from: [f64; 2]| {
            [
                centroid[0] + t * (from[0] - centroid[0]),
                centroid[1] + t * (from[1] - centroid[1]),
            ]
        };

        let xr = along(-REFLECT, worst.0);
        let fr = eval(xr)?;
        if fr < best.1 {
            let xe = along(-REFLECT * EXPAND, worst.0);
            let fe = eval(xe)?;
            simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[1].1 {
            simplex[2] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst.1 {
            let xc = along(-REFLECT * CONTRACT, worst.0);
            let fc = eval(xc)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = along(CONTRACT, worst.0);
            let fc = eval(xc)?;
            (xc, fc, fc < worst.1)
        };
        if accept {
            simplex[2] = (xc, fc);
            continue;
        }
        for vertex in simplex.iter_mut().skip(1) {
            let p = vertex.0;
            let q = [
                best.0[0] + SHRINK * (p[0] - best.0[0]),
                best.0[1] + SHRINK * (p[1] - best.0[1]),
            ];
            *vertex = (q, eval(q)?);
        }
    }

    let (p, v) = simplex[0];
    Ok(OptimizationResult {
        theta_hat: Velocity::new(p[0], p[1]),
        objective_value: v,
        iterations,
        evaluations,
        converged,
    })
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Maximises the pipeline's contrast over velocity. The reported objective
/// value is the (positive) contrast at the optimum.
pub fn maximize_contrast(
    stream: &EventStream,
    pipeline: Pipeline,
    theta0: Velocity,
    options: &NelderMeadOptions,
) -> Result<OptimizationResult> {
    let mut ev = pipeline.evaluator(stream);
    let mut r = nelder_mead(|t| -ev.objective(t), theta0, options)?;
    r.objective_value = -r.objective_value;
    Ok(r)
}

/// Axis-aligned velocity box, px/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub vx_min: f64,
    pub vx_max: f64,
    pub vy_min: f64,
    pub vy_max: f64,
}

impl Bounds {
    pub fn new(vx_min: f64, vx_max: f64, vy_min: f64, vy_max: f64) -> Result<Self> {
        let ok = [vx_min, vx_max, vy_min, vy_max].iter().all(|v| v.is_finite())
            && vx_min <= vx_max
            && vy_min <= vy_max;
        if !ok {
            return Err(Error::Contract(format!(
                "invalid bounds [{vx_min}, {vx_max}] x [{vy_min}, {vy_max}]"
            )));
        }
        Ok(Bounds { vx_min, vx_max, vy_min, vy_max })
    }

    pub fn symmetric(half: f64) -> Self {
        Bounds { vx_min: -half, vx_max: half, vy_min: -half, vy_max: half }
    }

    /// Lattice `min + k * step` up to and including `max` (within rounding).
    pub fn axis_len(min: f64, max: f64, step: f64) -> usize {
        ((max - min) / step + 1e-9).floor() as usize + 1
    }

    pub fn lattice(&self, step: f64) -> Result<Lattice> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Contract(format!("grid step must be positive, got {step}")));
        }
        Ok(Lattice {
            bounds: *self,
            step,
            nx: Self::axis_len(self.vx_min, self.vx_max, step),
            ny: Self::axis_len(self.vy_min, self.vy_max, step),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub bounds: Bounds,
    pub step: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major: index `j * nx + i` is `(vx_min + i*step, vy_min + j*step)`.
    pub fn point(&self, index: usize) -> Velocity {
        let (i, j) = (index % self.nx, index / self.nx);
        Velocity::new(
            self.bounds.vx_min + i as f64 * self.step,
            self.bounds.vy_min + j as f64 * self.step,
        )
    }

    pub fn points(&self) -> impl Iterator<Item = Velocity> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossLandscape {
    pub lattice: Lattice,
    /// Row-major over `(vy, vx)`; see [`Lattice::point`].
    pub values: Vec<f64>,
    pub corrected: bool,
}

impl LossLandscape {
    pub fn bounds(&self) -> Bounds {
        self.lattice.bounds
    }

    pub fn resolution(&self) -> f64 {
        self.lattice.step
    }

    pub fn argmax(&self) -> (Velocity, f64) {
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        (self.lattice.point(k), v)
    }

    /// Values as lines of whitespace-separated numbers, one line per `vy`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# vx {} {} vy {} {} step {} corrected {}\n",
            self.lattice.bounds.vx_min,
            self.lattice.bounds.vx_max,
            self.lattice.bounds.vy_min,
            self.lattice.bounds.vy_max,
            self.lattice.step,
            self.corrected
        );
        for row in self.values.chunks(self.lattice.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn landscape(stream: &EventStream, bounds: Bounds, resolution: f64, pipeline: Pipeline) -> Result<LossLandscape> {
    let lattice = bounds.lattice(resolution)?;
    let proto = pipeline.evaluator(stream);
    let values = (0..lattice.ny)
        .into_par_iter()
        .map_init(
            || proto.clone(),
            |ev, j| {
                (0..lattice.nx)
                    .map(|i| ev.objective(lattice.point(j * lattice.nx + i)))
                    .collect::<Vec<f64>>()
            },
        )
        .flatten()
        .collect();
    Ok(LossLandscape {
        lattice,
        values,
        corrected: pipeline.corrected,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocReport {
    pub roc_percent: f64,
    pub rms: f64,
    pub runs: usize,
    pub successes: usize,
    pub tolerance: f64,
    pub theta_gt: Velocity,
    pub outcomes: Vec<OptimizationResult>,
}

impl RocReport {
    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "roc_percent={:.4}\nrms={:.6}\nruns={}\nsuccesses={}\ntolerance={}\ntheta_gt={},{}\n",
            self.roc_percent,
            self.rms,
            self.runs,
            self.successes,
            self.tolerance,
            self.theta_gt.vx,
            self.theta_gt.vy
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocOptions {
    pub bounds: Bounds,
    pub grid_step: f64,
    pub tolerance: f64,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for RocOptions {
    fn default() -> Self {
        RocOptions {
            bounds: Bounds::symmetric(30.0),
            grid_step: 1.0,
            tolerance: 1.0,
            nelder_mead: NelderMeadOptions::default(),
        }
    }
}

/// Runs Nelder-Mead from every lattice point of `options.bounds` and scores
/// each end point against `theta_gt`.
pub fn evaluate_roc(
    stream: &EventStream,
    theta_gt: Velocity,
    options: &RocOptions,
    pipeline: Pipeline,
) -> Result<RocReport> {
    let lattice = options.bounds.lattice(options.grid_step)?;
    let proto = pipeline.evaluator(stream);
    let outcomes = (0..lattice.len())
        .into_par_iter()
        .map_init(
            || proto.clone(),
            |ev, k| {
                let r = nelder_mead(|t| -ev.objective(t), lattice.point(k), &options.nelder_mead)?;
                Ok(OptimizationResult {
                    objective_value: -r.objective_value,
                    ..r
                })
            },
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(score_runs(outcomes, theta_gt, options.tolerance))
}

pub fn score_runs(outcomes: Vec<OptimizationResult>, theta_gt: Velocity, tolerance: f64) -> RocReport {
    let runs = outcomes.len();
    let errors: Vec<f64> = outcomes.iter().map(|r| r.theta_hat.distance(&theta_gt)).collect();
    let successes = errors.iter().filter(|&&e| e <= tolerance).count();
    let (roc_percent, rms) = if runs == 0 {
        (0.0, 0.0)
    } else {
        (
            100.0 * successes as f64 / runs as f64,
            (errors.iter().map(|e| e * e).sum::<f64>() / runs as f64).sqrt(),
        )
    };
    RocReport {
        roc_percent,
        rms,
        runs,
        successes,
        tolerance,
        theta_gt,
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead(
            |t| (t.vx - 3.0).powi(2) + (t.vy + 2.0).powi(2),
            Velocity::ZERO,
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.theta_hat.distance(&Velocity::new(3.0, -2.0)) < 1e-3, "{r:?}");
        assert!(r.iterations <= NelderMeadOptions::default().max_iterations);
    }

    #[test]
    fn constant_objective_stops_at_start() {
        let start = Velocity::new(4.0, -7.0);
        let r = nelder_mead(|_| 2.5, start, &NelderMeadOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.theta_hat, start);
        assert_eq!(r.evaluations, 3);
    }

    #[test]
    fn non_finite_objective_aborts() {
        let err = nelder_mead(
            |t| if t.vx > 2.0 { f64::NAN } else { t.vx * t.vx },
            Velocity::new(-1.0, 0.0),
            &NelderMeadOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn iteration_cap_is_respected() {
        let opts = NelderMeadOptions { max_iterations: 3, ..Default::default() };
        let r = nelder_mead(|t| t.vx.powi(2) + 10.0 * t.vy.powi(2), Velocity::new(50.0, 50.0), &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn lattice_layout() {
        let l = Bounds::symmetric(30.0).lattice(1.0).unwrap();
        assert_eq!((l.nx, l.ny), (61, 61));
        assert_eq!(l.point(0), Velocity::new(-30.0, -30.0));
        assert_eq!(l.point(60), Velocity::new(30.0, -30.0));
        assert_eq!(l.point(61), Velocity::new(-30.0, -29.0));
        let l = Bounds::symmetric(30.0).lattice(3.0).unwrap();
        assert_eq!(l.len(), 21 * 21);
        assert!(Bounds::symmetric(1.0).lattice(0.0).is_err());
        assert!(Bounds::new(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn roc_scoring() {
        let gt = Velocity::new(1.0, 1.0);
        let mk = |vx, vy| OptimizationResult {
            theta_hat: Velocity::new(vx, vy),
            objective_value: 0.0,
            iterations: 1,
            evaluations: 1,
            converged: true,
        };
        let r = score_runs(vec![mk(1.0, 1.0), mk(1.0, 1.5), mk(4.0, 5.0), mk(1.0, 1.0)], gt, 1.0);
        assert_eq!(r.runs, 4);
        assert_eq!(r.successes, 3);
        assert_eq!(r.roc_percent, 75.0);
        assert!((r.rms - (25.25f64 / 4.0).sqrt()).abs() < 1e-12);
    }
}
