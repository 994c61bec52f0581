// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: cvent_core::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use cvent_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core { source, .. } => match source {
                E::SingularSolve | E::NotPositiveDefinite | E::ComplexRoot(_) | E::NotPsd(_) => {
                    EXIT_NUMERICAL
                }
                _ => EXIT_VALIDATION,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> CliResult<T>;
}

impl<T> Context<T> for cvent_core::Result<T> {
    fn context(self, what: impl Into<String>) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what.into(),
            source,
        })
    }
}
