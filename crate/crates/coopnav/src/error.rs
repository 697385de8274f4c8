use std::fmt;

/// Errors raised by filter updates, geometry construction, and configuration.
#[derive(Debug)]
pub enum Error {
    /// A required matrix inverse failed or the matrix is too ill-conditioned
    /// (estimated condition number above 1e12).
    SingularCovariance,
    /// Two ranging modules are closer than the degeneracy threshold, so no
    /// unit direction vector exists.
    DegenerateGeometry,
    /// A trajectory segment has non-physical parameters.
    InvalidSegment(String),
    /// Scenario or experiment configuration is invalid.
    Config(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SingularCovariance => write!(f, "singular or ill-conditioned covariance"),
            Error::DegenerateGeometry => write!(f, "degenerate ranging geometry"),
            Error::InvalidSegment(msg) => write!(f, "invalid trajectory segment: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
