//! Command-line front end for `grushin-core`.
//!
//! The binary is a thin shell around [`cli::run`]; every subcommand returns a
//! [`commands::Report`] that is rendered as JSON, CSV, a plain table or (for
//! the phase diagram) SVG.

pub mod cli;
pub mod commands;
pub mod expr;
pub mod files;
pub mod grid;
pub mod output;
pub mod phase;
pub mod sweep;

use std::fmt;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    CheckFailed = 1,
    Usage = 2,
    NonConvergence = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Exit status for a library error.
    pub fn of(e: &grushin_core::Error) -> Exit {
        use grushin_core::Error::*;
        match e {
            Domain(_) | Unsupported(_) => Exit::Usage,
            NonConvergence(_) | Overflow { .. } | InternalConsistency(_) => Exit::NonConvergence,
            _ => Exit::CheckFailed,
        }
    }
}

/// A failure that ends the run with a message and an exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { exit: Exit::Usage, message: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<grushin_core::Error> for CliError {
    fn from(e: grushin_core::Error) -> Self {
        CliError { exit: Exit::of(&e), message: e.to_string() }
    }
}

impl From<grid::GridError> for CliError {
    fn from(e: grid::GridError) -> Self {
        CliError::usage(e.0)
    }
}

impl From<expr::ExprError> for CliError {
    fn from(e: expr::ExprError) -> Self {
        match e {
            expr::ExprError::Syntax { .. } => CliError::usage(e.to_string()),
            expr::ExprError::Eval(inner) => inner.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(format!("I/O error: {e}"))
    }
}
