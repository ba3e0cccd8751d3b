use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    /// The kernel cannot be separated from the rest of the spectrum.
    #[error("spectral gap failure: eigenvalues {below:e} and {above:e} straddle the zero tolerance {zero_tol:e}")]
    GapFailure {
        below: f64,
        above: f64,
        zero_tol: f64,
    },

    #[error("eigenvalue {eigenvalue:e} lies inside the contour annulus ({inner:e}, {outer:e})")]
    ContourViolation {
        eigenvalue: f64,
        inner: f64,
        outer: f64,
    },

    #[error("frame is not orthonormal: deviation {deviation:e}")]
    InvalidFrame { deviation: f64 },

    #[error("selected cycle is orthogonal to the kernel: projected norm {norm:e}")]
    DegenerateSelection { norm: f64 },

    #[error("rank deficit: requested {requested} alive classes, found {found}")]
    RankDeficit { requested: usize, found: usize },

    #[error("transport breakdown: smallest overlap singular value {sigma_min:e}")]
    TransportBreakdown { sigma_min: f64 },

    #[error("diagram at time index {time_index} has {found} finite points, need 2")]
    ShortDiagram { time_index: usize, found: usize },

    #[error("unsupported frame rank {0}")]
    UnsupportedRank(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
