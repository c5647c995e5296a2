//! Batch driver for the `dicke-otto` simulator: configuration handling,
//! study execution and table output.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use config::{resolve, Cli, Command, RunConfig};
pub use run::{execute, Summary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Process exit status: 0 success, 1 configuration or I/O error, 2 when some
/// grid points failed.
pub fn exit_code(result: &Result<Summary, CliError>) -> i32 {
    match result {
        Ok(s) if s.failed_points == 0 => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}
