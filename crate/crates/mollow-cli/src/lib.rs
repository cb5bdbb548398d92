//! Command-line front end for the mollow simulator: configuration files,
//! sweep orchestration, CSV/JSON persistence, figure recipes, and static
//! plots. The binary in this package is the only user-facing surface; the
//! library exists so integration tests and fuzz targets can drive the
//! parsers and the sweep machinery directly.

pub mod calibrate_run;
pub mod config;
pub mod error;
pub mod plot;
pub mod presets;
pub mod records;
pub mod sweep;

pub use error::{CliError, CliResult};
