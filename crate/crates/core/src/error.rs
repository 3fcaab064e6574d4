use thiserror::Error;

/// Errors produced by the measure interpolation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("source Gaussian is degenerate (min eigenvalue {0:e})")]
    DegenerateSource(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: expected {expected} items, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),
    #[error("time {t} outside interpolation domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("singular linear system")]
    SingularMatrix,
    #[error("quantile values are not increasing")]
    NotIncreasing,
    #[error("invalid quantile grid: {0}")]
    InvalidQuantiles(&'static str),
    #[error("probability level {0} outside (0, 1)")]
    OutOfRange(f64),
    #[error("point clouds have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("observations mix measure families")]
    MixedFamilies,
    #[error("operation requires the {0} family")]
    WrongFamily(&'static str),
    #[error("need at least {needed} observations, got {found}")]
    TooFewObservations { needed: usize, found: usize },
    #[error("thin-plate sites are collinear")]
    CollinearSites,
    #[error("duplicate thin-plate sites {0} and {1}")]
    DuplicateSites(usize, usize),
    #[error("standard deviation must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("mesh {delta} violates smallness condition delta < {limit}")]
    MeshTooCoarse { delta: f64, limit: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
