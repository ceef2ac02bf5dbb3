//! Batch experiment runner: strict TOML experiment files, parallel seed
//! sweeps, CSV reports, protocol logs and event traces.

use std::path::{Path, PathBuf};

use thiserror::Error;

mod experiment;
mod spec;

pub use experiment::{
    chain_growth, emit_trace, median, run_experiment, run_single, ExperimentOutput, RunRecord, RUN_COLUMNS,
};
pub use spec::{load_config, render, ChainGrowth, ExperimentSpec, Point, SweepAxis};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}:{column}: {message}", file.as_ref().map_or("<input>".into(), |p| p.display().to_string()))]
    Parse {
        file: Option<PathBuf>,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown run id {0:?}; expected <point>-<seed>")]
    UnknownRun(String),
    #[error("simulation failed: {0}")]
    Runtime(#[from] fogchain::sim::SimError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl CliError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Parse {
                line, column, message, ..
            } => CliError::Parse {
                file: Some(path.to_path_buf()),
                line,
                column,
                message,
            },
            other => other,
        }
    }

    /// Process exit status: 3 config, 4 runtime, 5 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } | CliError::UnknownRun(_) => 3,
            CliError::Runtime(_) => 4,
            CliError::Io { .. } | CliError::Csv { .. } => 5,
        }
    }
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}
