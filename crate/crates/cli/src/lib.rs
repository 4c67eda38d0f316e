//! Library side of the `rieszsym` command-line tool.
//!
//! Each subcommand is a function from a [`config::RunConfig`] to an
//! [`Outcome`], so the whole workflow can be driven from tests without
//! spawning processes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod io;

use std::process::ExitCode;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Usage,
    Divergence,
    Violation,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Usage => 1,
            Status::Divergence => 2,
            Status::Violation => 3,
            Status::Inconclusive => 4,
        }
    }
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> ExitCode {
        ExitCode::from(s.code())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] rieszsym_core::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Result of a subcommand that ran to completion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    /// One-line summary for stderr.
    pub summary: String,
    /// Files written, in order.
    pub artifacts: Vec<std::path::PathBuf>,
}

/// Version tag embedded in every JSON document.
pub const SCHEMA_VERSION: u32 = 1;
