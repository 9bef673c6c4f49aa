//! Motion estimation for event cameras by contrast maximisation, with an
//! exposure-aware correction that removes the bias of warped-image contrast
//! toward large velocities under noise.

pub mod analytic;
pub mod cli;
pub mod correction;
pub mod error;
pub mod events;
pub mod objective;
pub mod optimizer;
pub mod oracle;
pub mod pipeline;
pub mod render;
pub mod sim;
pub mod warp;

pub use correction::{CorrectionOptions, DEFAULT_ETA};
pub use error::{Error, Result};
pub use events::{Event, EventStream, Format, Polarity, SensorGeometry};
pub use objective::ContrastValue;
pub use optimizer::{Bounds, NelderMeadOptions, OptimizationResult};
pub use pipeline::{Evaluator, Pipeline};
pub use warp::{Kernel, Velocity};

