//! Command-line front end for the Walsh logarithmic-means laboratory.
//!
//! The binary exposes four experiment commands over the core library:
//!
//! - `kernel`   — export one 1-d kernel profile (samples + multipliers);
//! - `converge` — approximation-error sweep of the mixed mean on a builtin
//!   or user-supplied function;
//! - `diverge`  — kernel-norm growth, operator lower bounds, superlevel
//!   measures, and band envelope scans;
//! - `norms`    — strong/weak ratio audit of the mean against entropy
//!   functionals over a seeded random suite.
//!
//! Every command reads an optional flat `key=value` config file, lets
//! command-line flags override file entries, and emits CSV (or JSON for
//! the envelope scan) with full-precision floats so outputs can serve as
//! regression fixtures. A timestamped `#` header line makes runs
//! self-documenting; `--quiet-header` suppresses it so repeated seeded
//! invocations are byte-identical.

pub mod builtins;
pub mod config;
pub mod run;

use std::fmt;

/// CLI-level error split by exit-code class: usage errors exit 2,
/// numeric/resource/I-O errors exit 1.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config-file entries, or values failing validation;
    /// the message names the offending field.
    Usage(String),
    /// Errors surfacing from the computation itself.
    Core(walsh_logmeans_core::Error),
    /// Filesystem trouble reading configs or writing outputs.
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<walsh_logmeans_core::Error> for CliError {
    fn from(e: walsh_logmeans_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Shorthand used throughout config validation.
pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
