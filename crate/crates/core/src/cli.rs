//! Command-line front end. `run` never exits the process; the binary maps its
//! result to an exit code.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::correction::{apply_correction, correction_field_for, CorrectionOptions, DEFAULT_ETA};
use crate::error::{Error, Result};
use crate::events::{parse_binary, parse_events, serialize_events, EventStream, Format, SensorGeometry};
use crate::optimizer::{
    evaluate_roc, landscape, maximize_contrast, Bounds, NelderMeadOptions, RocOptions,
};
use crate::oracle::{run_checks, OracleOptions};
use crate::pipeline::Pipeline;
use crate::render::{render_pgm, render_png, Grid, RenderOptions};
use crate::sim::{gen_scene_signal, gen_translating_scene, gen_uniform_noise, NoiseSpec, SceneSpec};
use crate::warp::{warped_image, Kernel, Velocity};

/// Worker-count cap for landscape and RoC sweeps; 0 or unset means automatic.
pub const THREADS_ENV: &str = "EVENT_WARP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "event-warp", version, about = "Contrast-maximisation motion estimation for event cameras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the velocity of one stream with Nelder-Mead.
    Estimate {
        events: PathBuf,
        #[arg(long, value_parser = parse_pair, default_value = "0,0")]
        start: Velocity,
        #[arg(long, default_value_t = NelderMeadOptions::default().initial_scale)]
        scale: f64,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Evaluate the objective on a velocity lattice.
    Landscape {
        events: PathBuf,
        /// vx_min,vx_max,vy_min,vy_max, or a single half-width.
        #[arg(long, value_parser = parse_bounds, default_value = "30")]
        bounds: Bounds,
        #[arg(long, default_value_t = 1.0)]
        res: f64,
        /// Image path (.png or .pgm); values go beside it with a .txt extension.
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Render the motion-compensated image at a given velocity.
    Map {
        events: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        theta: Velocity,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the pixel values as text.
        #[arg(long)]
        values: Option<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Generate a synthetic stream.
    Simulate {
        #[command(subcommand)]
        kind: SimulateKind,
    },
    /// Multi-start rate of convergence against a known velocity.
    Roc {
        events: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        gt: Velocity,
        #[arg(long, value_parser = parse_bounds, default_value = "30")]
        bounds: Bounds,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 1.0)]
        tol: f64,
        #[arg(long, default_value_t = NelderMeadOptions::default().initial_scale)]
        scale: f64,
        /// Write the report here as well as to stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Compare the closed-form noise model with simulated streams.
    Oracle {
        #[arg(long, default_value_t = OracleOptions::default().events)]
        events: usize,
        #[arg(long, default_value_t = OracleOptions::default().seed)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimulateKind {
    /// Uniform noise.
    Noise {
        /// Events per second over the whole sensor.
        #[arg(long)]
        rate: f64,
        #[command(flatten)]
        common: SimArgs,
    },
    /// Point features translating at a fixed velocity, plus uniform noise.
    Scene {
        #[arg(long, value_parser = parse_pair)]
        theta: Velocity,
        #[arg(long, default_value_t = 20)]
        features: usize,
        /// Events per second emitted by each feature while in view.
        #[arg(long, default_value_t = 20.0)]
        feature_rate: f64,
        /// Noise events per second over the whole sensor.
        #[arg(long, default_value_t = 0.0, conflicts_with = "noise_ratio")]
        noise_rate: f64,
        /// Noise events per signal event; overrides --noise-rate.
        #[arg(long)]
        noise_ratio: Option<f64>,
        #[command(flatten)]
        common: SimArgs,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Window length in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 240)]
    pub width: u16,
    #[arg(long, default_value_t = 180)]
    pub height: u16,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use round(rate * delta) noise events instead of a Poisson draw.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    pub format: FormatArg,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Sensor width for text input (binary files carry their own).
    #[arg(long, default_value_t = 240)]
    pub width: u16,
    #[arg(long, default_value_t = 180)]
    pub height: u16,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Apply the exposure correction before measuring contrast.
    #[arg(long)]
    pub corrected: bool,
    #[arg(long, value_enum, default_value_t = KernelArg::Nearest)]
    pub kernel: KernelArg,
    /// Minimum exposure for a pixel to enter the statistics.
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Upper bound on the correction factor.
    #[arg(long)]
    pub clamp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Nearest,
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Binary,
}

impl PipelineArgs {
    fn pipeline(&self) -> Result<Pipeline> {
        if !(self.eta >= 0.0 && self.eta < 1.0) {
            return Err(Error::Contract(format!("eta must lie in [0, 1), got {}", self.eta)));
        }
        if let Some(c) = self.clamp {
            if c.is_nan() || c < 1.0 {
                return Err(Error::Contract(format!("clamp must be at least 1, got {c}")));
            }
        }
        Ok(Pipeline {
            corrected: self.corrected,
            kernel: match self.kernel {
                KernelArg::Nearest => Kernel::Nearest,
                KernelArg::Bilinear => Kernel::Bilinear,
            },
            correction: CorrectionOptions {
                eta: self.eta,
                clamp: self.clamp,
            },
        })
    }
}

impl InputArgs {
    fn load(&self, path: &Path) -> Result<EventStream> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        match Format::detect(&bytes) {
            Format::Binary => parse_binary(&bytes),
            Format::Text => parse_events(&bytes, Format::Text, SensorGeometry::new(self.width, self.height)?),
        }
    }
}

fn parse_pair(s: &str) -> std::result::Result<Velocity, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected vx,vy, got {s:?}"));
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| format!("bad number {p:?}")))
        .collect::<std::result::Result<_, _>>()?;
    let theta = Velocity::new(v[0], v[1]);
    if !theta.is_finite() {
        return Err(format!("velocity must be finite, got {s:?}"));
    }
    Ok(theta)
}

fn parse_bounds(s: &str) -> std::result::Result<Bounds, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [h] if *h > 0.0 && h.is_finite() => Ok(Bounds::symmetric(*h)),
        [a, b, c, d] => Bounds::new(*a, *b, *c, *d).map_err(|e| e.to_string()),
        _ => Err(format!("expected a half-width or vx_min,vx_max,vy_min,vy_max, got {s:?}")),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_image(path: &Path, grid: &Grid, options: &RenderOptions) -> Result<()> {
    let bytes = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pgm") => render_pgm(grid, options)?,
        Some(e) if e.eq_ignore_ascii_case("png") => render_png(grid, options)?,
        _ => {
            return Err(Error::Contract(format!(
                "output {} must end in .png or .pgm",
                path.display()
            )))
        }
    };
    write_file(path, &bytes)
}

fn grid_text(grid: &Grid) -> String {
    let mut out = String::new();
    for row in grid.values.chunks(grid.width) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Contract(format!("{THREADS_ENV} must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Estimate {
            events,
            start,
            scale,
            input,
            pipeline,
        } => {
            let p = pipeline.pipeline()?;
            let stream = input.load(&events)?;
            let options = NelderMeadOptions {
                initial_scale: scale,
                ..NelderMeadOptions::default()
            };
            let r = maximize_contrast(&stream, p, start, &options)?;
            writeln!(
                out,
                "theta_hat={},{}\nobjective={:.9e}\niterations={}\nevaluations={}\nconverged={}",
                r.theta_hat.vx, r.theta_hat.vy, r.objective_value, r.iterations, r.evaluations, r.converged
            )?;
        }
        Command::Landscape {
            events,
            bounds,
            res,
            output,
            input,
            pipeline,
        } => {
            let p = pipeline.pipeline()?;
            let values_path = output.with_extension("txt");
            if values_path == output {
                return Err(Error::Contract("landscape image must not use the .txt extension".into()));
            }
            let stream = input.load(&events)?;
            let l = landscape(&stream, bounds, res, p)?;
            let grid = Grid::new(l.lattice.nx, l.lattice.ny, l.values.clone())?;
            write_image(&output, &grid, &RenderOptions::default())?;
            write_file(&values_path, l.to_text().as_bytes())?;
            let (best, value) = l.argmax();
            writeln!(
                out,
                "argmax={},{}\nvalue={value:.9e}\nimage={}\nvalues={}",
                best.vx,
                best.vy,
                output.display(),
                values_path.display()
            )?;
        }
        Command::Map {
            events,
            theta,
            output,
            values,
            input,
            pipeline,
        } => {
            let p = pipeline.pipeline()?;
            let stream = input.load(&events)?;
            let image = warped_image(&stream, theta, p.kernel);
            let (w, h) = (image.width(), image.height());
            let data = if p.corrected {
                let field = correction_field_for(&image, p.correction);
                apply_correction(&image, &field)?.values
            } else {
                image.values
            };
            let grid = Grid::new(w, h, data)?;
            write_image(&output, &grid, &RenderOptions::for_maps())?;
            if let Some(path) = values {
                write_file(&path, grid_text(&grid).as_bytes())?;
            }
            writeln!(out, "canvas={w}x{h}\nimage={}", output.display())?;
        }
        Command::Simulate { kind } => {
            let (stream, common) = match kind {
                SimulateKind::Noise { rate, common } => {
                    let spec = noise_spec(rate, &common)?;
                    (gen_uniform_noise(&spec), common)
                }
                SimulateKind::Scene {
                    theta,
                    features,
                    feature_rate,
                    noise_rate,
                    noise_ratio,
                    common,
                } => {
                    let mut noise = noise_spec(noise_rate, &common)?;
                    // keep the noise draws independent of the feature draws
                    noise.seed = common.seed.wrapping_add(1);
                    let mut spec = SceneSpec::random_points(theta, features, feature_rate, noise, common.seed);
                    if let Some(k) = noise_ratio {
                        if !(k >= 0.0 && k.is_finite()) {
                            return Err(Error::Contract(format!("noise ratio must be non-negative, got {k}")));
                        }
                        let signal = gen_scene_signal(&spec).len() as f64;
                        spec.noise.rho = if common.delta > 0.0 { k * signal / common.delta } else { 0.0 };
                    }
                    (gen_translating_scene(&spec), common)
                }
            };
            let format = match common.format {
                FormatArg::Text => Format::Text,
                FormatArg::Binary => Format::Binary,
            };
            write_file(&common.output, &serialize_events(&stream, format))?;
            writeln!(out, "events={}\noutput={}", stream.len(), common.output.display())?;
        }
        Command::Roc {
            events,
            gt,
            bounds,
            step,
            tol,
            scale,
            output,
            input,
            pipeline,
        } => {
            let p = pipeline.pipeline()?;
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::Contract(format!("tolerance must be positive, got {tol}")));
            }
            let stream = input.load(&events)?;
            let options = RocOptions {
                bounds,
                grid_step: step,
                tolerance: tol,
                nelder_mead: NelderMeadOptions {
                    initial_scale: scale,
                    ..NelderMeadOptions::default()
                },
            };
            let report = evaluate_roc(&stream, gt, &options, p)?;
            let text = report.to_text();
            if let Some(path) = output {
                write_file(&path, text.as_bytes())?;
            }
            out.write_all(text.as_bytes())?;
        }
        Command::Oracle { events, seed } => {
            let checks = run_checks(&OracleOptions { events, seed });
            let mut text = String::new();
            for c in &checks {
                let _ = writeln!(text, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            out.write_all(text.as_bytes())?;
            if checks.iter().any(|c| !c.passed) {
                return Err(Error::Contract("oracle checks failed".into()));
            }
        }
    }
    Ok(())
}

fn noise_spec(rate: f64, common: &SimArgs) -> Result<NoiseSpec> {
    let spec = NoiseSpec::new(rate, common.delta, SensorGeometry::new(common.width, common.height)?, common.seed)?;
    Ok(if common.exact { spec.exact() } else { spec })
}

/// Parses `args` (including the program name) and runs the command; returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            1
        }
    }
}
