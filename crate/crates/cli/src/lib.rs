//! Command-line plumbing for tensor-train completion: image and frame I/O,
//! sampling masks, TOML configuration and the subcommand drivers.

pub mod config;
pub mod error;
pub mod image_io;
pub mod mask;
pub mod run;

pub use error::{CliError, Result};
