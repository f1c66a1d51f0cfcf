use thiserror::Error;

/// Errors raised while validating models or computing precision coefficients.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} is not a symmetric positive semi-definite matrix")]
    NonPsdCovariance { what: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("item {item}: thresholds must be strictly increasing")]
    NonMonotoneThresholds { item: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("quadrature grid needs at least 2 nodes per dimension (got {0})")]
    GridTooCoarse(usize),

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("inadmissible response pattern: {0}")]
    InadmissiblePattern(String),

    #[error("marginal probability of a response pattern underflowed")]
    ZeroMarginal,

    #[error("pattern space of {count} patterns exceeds the cap of {cap}")]
    PatternSpaceTooLarge { count: f64, cap: usize },

    #[error("unique covariance matrix is singular or ill-conditioned")]
    SingularTheta,

    #[error("total variance of the summed score is zero")]
    DegenerateSum,

    #[error("outcome has zero variance")]
    DegenerateOutcome,

    #[error("regressor has zero variance")]
    DegenerateRegressor,

    #[error("spline basis is ill-conditioned (condition number {condition:.3e})")]
    IllConditionedBasis { condition: f64 },

    #[error("unsupported for this model: {0}")]
    Unsupported(String),

    #[error("score kind mismatch: {0}")]
    ScoreKind(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
