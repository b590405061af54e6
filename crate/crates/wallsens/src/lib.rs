//! Transient heat conduction through multilayer walls with jointly marched
//! parameter sensitivities, Taylor surrogates, derivative-based importance
//! measures and sampling-based baselines.

pub mod baselines;
pub mod cases;
pub mod envelope;
pub mod error;
pub mod fd;
pub mod grid;
mod jet;
pub mod metrics;
pub mod oracle;
pub mod sensitivity;
pub mod signal;
pub mod solver;
pub mod stencil;
pub mod taylor;
pub mod validation;
pub mod wall;
pub mod weather;

pub use error::{Error, Result};
pub use grid::Grid;
pub use sensitivity::{propagate, SensitivityRun, Target};
pub use signal::Signal;
pub use solver::{simulate, solve, thermal_loads, FieldHistory, Recording, TimeSeries};
pub use wall::{validation_case, DimensionlessProblem, ParamId, ParamKind};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
