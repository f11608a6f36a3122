use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parameters outside the existence regime: {0}")]
    Regime(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no sign change in bracket: {0}")]
    Bracket(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unsupported parameter: {0}")]
    Unsupported(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("descent stagnated: {0}")]
    Stagnation(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad input or configuration, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Config(_)
            | Error::Regime(_)
            | Error::Data(_)
            | Error::GridMismatch(_)
            | Error::Unsupported(_)
            | Error::Io { .. } => 2,
            Error::Degenerate(_)
            | Error::Bracket(_)
            | Error::Infeasible(_)
            | Error::Convergence(_)
            | Error::Stagnation(_)
            | Error::Consistency(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_input_from_runtime() {
        assert_eq!(Error::Regime("q".into()).exit_code(), 2);
        assert_eq!(Error::Config("m".into()).exit_code(), 2);
        assert_eq!(Error::Convergence("x".into()).exit_code(), 1);
        let e = Error::io("/nope", std::io::Error::other("boom"));
        assert!(e.to_string().contains("/nope"));
        assert_eq!(e.exit_code(), 2);
    }
}
