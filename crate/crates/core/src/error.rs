use thiserror::Error;

/// Errors raised across the crate.
///
/// Geometric variants signal a violation of general position at the
/// working tolerance; the experiment layer treats them as a reason to
/// discard and redraw the sample.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector is not unit length (norm {0})")]
    NotUnit(f64),
    #[error("degenerate simplex: affine hull Gram system is singular")]
    DegenerateSimplex,
    #[error("circumscribed cap is bounded by a great-sphere")]
    GreatSphere,
    #[error("point lies on a facet plane at tolerance")]
    TangencyAtTolerance,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("not in general position: {0}")]
    NotGeneral(String),
    #[error("facet hyperplane passes through the origin at tolerance")]
    AmbiguousFacet,
    #[error("point lies on a cap boundary at tolerance")]
    CapBoundary,
    #[error("interval partition failure: face {face:?} covered {count} times")]
    PartitionFailure { face: Vec<usize>, count: usize },
    #[error("too few points: {found} < {required}")]
    TooFewPoints { found: usize, required: usize },
    #[error("missing constant C(ell={ell}, k={k})")]
    MissingConstant { ell: usize, k: usize },
    #[error("negative coordinate {0} beyond tolerance")]
    NegativeCoordinate(f64),
    #[error("too many discarded trials: {discards} discards over {trials} trials")]
    ExcessiveDiscards { discards: usize, trials: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by invalid arguments or malformed input, as
    /// opposed to numerical or I/O failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::DimensionMismatch { .. }
                | Error::NotUnit(_)
                | Error::MissingConstant { .. }
                | Error::NegativeCoordinate(_)
                | Error::Parse(_)
        )
    }

    /// True for the probability-zero events that justify resampling.
    pub fn is_general_position(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSimplex
                | Error::GreatSphere
                | Error::TangencyAtTolerance
                | Error::DegenerateInput(_)
                | Error::NotGeneral(_)
                | Error::AmbiguousFacet
                | Error::CapBoundary
                | Error::PartitionFailure { .. }
                | Error::TooFewPoints { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
