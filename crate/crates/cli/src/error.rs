use std::fmt;

use basinscope::convergence::ConvergenceError;
use basinscope::lyap::LyapError;
use basinscope::oracle::OracleError;
use basinscope::region::RegionError;
use basinscope::spectral::SpectralError;

pub const EXIT_CONTRADICTION: i32 = 1;
pub const EXIT_NOT_HURWITZ: i32 = 2;
pub const EXIT_NOT_DIAGONALIZABLE: i32 = 3;
pub const EXIT_PARSE: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

/// An exit code with a one-line diagnostic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into().replace('\n', " "),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(EXIT_PARSE, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(EXIT_INTERNAL, message)
    }

    pub fn io(what: &std::path::Path, e: std::io::Error) -> Self {
        Self::internal(format!("cannot write {}: {e}", what.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ERROR {}: {}", self.code, self.message)
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        let code = match e {
            SpectralError::NotHurwitz { .. } => EXIT_NOT_HURWITZ,
            SpectralError::NotDiagonalizable { .. } => EXIT_NOT_DIAGONALIZABLE,
            SpectralError::TooLarge(_) | SpectralError::InvalidSystem(_) => EXIT_PARSE,
            _ => EXIT_INTERNAL,
        };
        Self::new(code, e.to_string())
    }
}

impl From<LyapError> for CliError {
    fn from(e: LyapError) -> Self {
        match e {
            LyapError::Spectral(s) => s.into(),
            LyapError::DegreeOutOfRange { .. } => Self::parse(e.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::InvalidWindow(_) => Self::parse(e.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::InvalidConfig(_) | OracleError::NotPlanar(_) => Self::parse(e.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}

impl From<ConvergenceError> for CliError {
    fn from(e: ConvergenceError) -> Self {
        match e {
            ConvergenceError::Lyap(l) => l.into(),
            ConvergenceError::NotOneDimensional(_) => Self::parse(e.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}
