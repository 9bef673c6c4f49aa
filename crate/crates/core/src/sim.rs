//! Synthetic streams: uniform sensor noise and translating point scenes with
//! known motion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Polarity, SensorGeometry};
use crate::warp::Velocity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    /// Event count drawn from Poisson(rho * delta).
    #[default]
    Poisson,
    /// Exactly round(rho * delta) events.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Events per second over the whole sensor.
    pub rho: f64,
    /// Window length in seconds.
    pub delta: f64,
    pub geometry: SensorGeometry,
    pub seed: u64,
    pub count_mode: CountMode,
}

impl NoiseSpec {
    pub fn new(rho: f64, delta: f64, geometry: SensorGeometry, seed: u64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) || !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Contract(format!(
                "noise rate and window must be non-negative, got rho={rho}, delta={delta}"
            )));
        }
        Ok(NoiseSpec {
            rho,
            delta,
            geometry,
            seed,
            count_mode: CountMode::Poisson,
        })
    }

    pub fn exact(self) -> Self {
        NoiseSpec {
            count_mode: CountMode::Exact,
            ..self
        }
    }
}

fn draw_count(rng: &mut ChaCha8Rng, mean: f64, mode: CountMode) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    match mode {
        CountMode::Exact => mean.round() as usize,
        CountMode::Poisson => Poisson::new(mean).expect("positive finite mean").sample(rng) as usize,
    }
}

fn window_us(delta: f64) -> u64 {
    (delta * 1e6).round() as u64
}

fn noise_events(spec: &NoiseSpec, rng: &mut ChaCha8Rng) -> Vec<Event> {
    let n = draw_count(rng, spec.rho * spec.delta, spec.count_mode);
    let span = window_us(spec.delta);
    let (w, h) = (spec.geometry.width, spec.geometry.height);
    (0..n)
        .map(|_| {
            let t = rng.random_range(0..=span);
            let x = rng.random_range(0..w);
            let y = rng.random_range(0..h);
            let p = if rng.random::<bool>() { Polarity::On } else { Polarity::Off };
            Event::new(t, x, y, p)
        })
        .collect()
}

/// Uniformly distributed noise over the sensor and the window `[0, delta]`.
pub fn gen_uniform_noise(spec: &NoiseSpec) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let events = noise_events(spec, &mut rng);
    EventStream::new(events, spec.geometry).expect("generated coordinates lie on the sensor")
}

/// A point emitter fixed in the world. `x0, y0` is its (sub-pixel) position
/// on the sensor plane at `t = 0`; it then drifts with the scene velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub x0: f64,
    pub y0: f64,
    /// Emission rate while the point is in view, events per second.
    pub rate: f64,
}

impl Feature {
    pub fn point(x0: f64, y0: f64, rate: f64) -> Self {
        Feature { x0, y0, rate }
    }

    /// `n` evenly spaced points from `a` to `b`, sharing `rate` equally.
    pub fn segment(a: (f64, f64), b: (f64, f64), n: usize, rate: f64) -> Vec<Feature> {
        let n = n.max(1);
        (0..n)
            .map(|i| {
                let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                Feature::point(a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1), rate / n as f64)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub theta_true: Velocity,
    pub features: Vec<Feature>,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl SceneSpec {
    /// `count` point features placed uniformly over the region that crosses
    /// the sensor during the window, each emitting at `rate`.
    pub fn random_points(theta_true: Velocity, count: usize, rate: f64, noise: NoiseSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f00d);
        let (w, h) = (noise.geometry.w(), noise.geometry.h());
        let sweep_x = theta_true.vx * noise.delta;
        let sweep_y = theta_true.vy * noise.delta;
        let (x_lo, x_hi) = (-sweep_x.max(0.0), w - sweep_x.min(0.0));
        let (y_lo, y_hi) = (-sweep_y.max(0.0), h - sweep_y.min(0.0));
        let features = (0..count)
            .map(|_| Feature::point(rng.random_range(x_lo..x_hi), rng.random_range(y_lo..y_hi), rate))
            .collect();
        SceneSpec {
            theta_true,
            features,
            noise,
            seed,
        }
    }
}

fn feature_events(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Vec<Event> {
    let g = spec.noise.geometry;
    let span = window_us(spec.noise.delta);
    let mut events = Vec::new();
    for f in &spec.features {
        let n = draw_count(rng, f.rate * spec.noise.delta, CountMode::Poisson);
        for _ in 0..n {
            let t = rng.random_range(0..=span);
            let ts = t as f64 * 1e-6;
            let x = (f.x0 + spec.theta_true.vx * ts).round();
            let y = (f.y0 + spec.theta_true.vy * ts).round();
            if x < 0.0 || y < 0.0 || x >= g.w() || y >= g.h() {
                continue;
            }
            let p = if rng.random::<bool>() { Polarity::On } else { Polarity::Off };
            events.push(Event::new(t, x as u16, y as u16, p));
        }
    }
    events
}

/// Signal events only (no noise), sorted.
pub fn gen_scene_signal(spec: &SceneSpec) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let events = feature_events(spec, &mut rng);
    EventStream::new(events, spec.noise.geometry).expect("kept events lie on the sensor")
}

/// Features translating at `theta_true` plus uniform noise per `spec.noise`.
pub fn gen_translating_scene(spec: &SceneSpec) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events = feature_events(spec, &mut rng);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.noise.seed);
    events.extend(noise_events(&spec.noise, &mut noise_rng));
    EventStream::new(events, spec.noise.geometry).expect("generated coordinates lie on the sensor")
}
