use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode surfaced by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("map `{0}` is not invertible")]
    NonInvertibleMap(String),
    #[error("point has {got} coordinates, map expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("map `{0}` has no Jacobian")]
    NoJacobian(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("region mismatch: {0}")]
    RegionMismatch(String),
    #[error("predicted {predicted} cells exceeds cap {cap}")]
    DepthOverflow { predicted: u128, cap: u128 },
    #[error("curve depth {depth} is below the minimum of {min}")]
    CurveTooShallow { depth: usize, min: usize },
    #[error("region has zero volume")]
    DegenerateRegion,
    #[error("entropy {0} is not finite")]
    InfiniteEntropy(f64),
    #[error("entropy {0} is not positive; no chaotic timescale")]
    NonChaotic(f64),
    #[error("q = {0} is not above one grain")]
    SubPlanck(f64),
    #[error("Hilbert-space dimension {0} is below 16")]
    DimensionTooSmall(usize),
    #[error("norm drifted by {0:e}")]
    NonUnitary(f64),
    #[error("time grids differ: {0}")]
    GridMismatch(String),
    #[error("need at least {needed} usable points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable diagnostic name, used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonInvertibleMap(_) => "NonInvertibleMap",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NoJacobian(_) => "NoJacobian",
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::RegionMismatch(_) => "RegionMismatch",
            Error::DepthOverflow { .. } => "DepthOverflow",
            Error::CurveTooShallow { .. } => "CurveTooShallow",
            Error::DegenerateRegion => "DegenerateRegion",
            Error::InfiniteEntropy(_) => "InfiniteEntropy",
            Error::NonChaotic(_) => "NonChaotic",
            Error::SubPlanck(_) => "SubPlanck",
            Error::DimensionTooSmall(_) => "DimensionTooSmall",
            Error::NonUnitary(_) => "NonUnitary",
            Error::GridMismatch(_) => "GridMismatch",
            Error::InsufficientPoints { .. } => "InsufficientPoints",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}
