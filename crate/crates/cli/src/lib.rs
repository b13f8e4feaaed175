//! File formats, reports and the command-line driver for `microset-core`.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod rational;
pub mod report;

pub use cli::{execute, Cli};
pub use error::{CliError, Result};
pub use report::Report;
