//! Library side of the `attrib` binary: configuration and subcommands.

pub mod commands;
pub mod config;

use std::path::PathBuf;

pub use commands::{cmd_datagen, cmd_edit, cmd_evaluate, cmd_metrics, MetricsInput, MetricsOutput, UnscoredEdit};
pub use config::{Overrides, RunConfig};

/// Nothing went wrong.
pub const EXIT_OK: i32 = 0;
/// The run finished but some items failed or were skipped.
pub const EXIT_PARTIAL: i32 = 1;
/// Bad configuration, unreadable input, or nothing could be produced.
pub const EXIT_FATAL: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: attrib_core::Error,
    },

    #[error(transparent)]
    Core(#[from] attrib_core::Error),
}
