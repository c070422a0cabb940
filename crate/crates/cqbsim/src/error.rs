// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Coarse classification used by the CLI to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorClass {
    Config,
    Numeric,
    Convergence,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error on {what}: {reason}")]
    Parse { what: String, reason: String },
}

impl Error {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidField { .. } | Error::Config(_) | Error::Parse { .. } => {
                ErrorClass::Config
            }
            Error::NonFinite(_) | Error::Numeric(_) => ErrorClass::Numeric,
            Error::Convergence(_) => ErrorClass::Convergence,
            Error::Io { .. } => ErrorClass::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
