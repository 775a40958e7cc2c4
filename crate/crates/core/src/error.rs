//! Crate-wide error taxonomy.
//!
//! Variants are grouped by who is at fault: usage/input problems (bad files,
//! malformed lines, out-of-range indices, inconsistent configuration,
//! mismatched dimensions) map to process exit code 2, while internal failures
//! (numerical breakdown, violated invariants) map to exit code 1.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Filesystem-level failure (missing file, permission, short write).
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A text artifact could not be parsed; carries the 1-based line number.
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// An index or step fell outside its valid range.
    #[error("out of bounds: {0}")]
    Bounds(String),

    /// Inconsistent or incomplete configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Mismatched shapes between graph, features, labels, or matrices.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Numerical breakdown (non-finite values, singular systems where a
    /// solution is required).
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A violated internal invariant; always a bug in this crate.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Helper for IO errors that keeps the offending path attached.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Helper for parse errors with a 1-based line number.
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code the CLI maps this error to: 2 for usage/input
    /// problems, 1 for internal/numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Bounds(_)
            | Error::Config(_)
            | Error::Dimension(_) => 2,
            Error::Numeric(_) | Error::Internal(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_user_vs_internal() {
        assert_eq!(Error::Bounds("x".into()).exit_code(), 2);
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::Dimension("x".into()).exit_code(), 2);
        assert_eq!(
            Error::parse("f.txt", 3, "bad token").exit_code(),
            2,
            "malformed input is the caller's fault"
        );
        assert_eq!(Error::Numeric("nan".into()).exit_code(), 1);
        assert_eq!(Error::Internal("bug".into()).exit_code(), 1);
    }

    #[test]
    fn parse_error_message_carries_line_number() {
        let e = Error::parse("graph.edges", 17, "expected two integers");
        assert!(e.to_string().contains("line 17"));
        assert!(e.to_string().contains("graph.edges"));
    }
}
