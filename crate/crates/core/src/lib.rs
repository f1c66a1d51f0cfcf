//! Reliability and proportional reduction in mean squared error (PRMSE)
//! for observed and latent scores of measurement models.
//!
//! Closed forms are available for the linear factor model and, by pattern
//! enumeration with quadrature, for unidimensional categorical models. Any
//! model and score can be handled by Monte Carlo: simulate, regress, and
//! read off the coefficient of determination.

pub mod analytic_irt;
pub mod analytic_linear;
pub mod error;
pub mod fixtures;
mod linalg;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod regression;
pub mod simulation;

pub use error::{Error, Result};
pub use mc::{
    analytic_coefficients, analytic_reports, convergence_diagnostic, estimate_prmse, estimate_reliability,
    CoefficientKind, ConvergencePoint, McConfig, McMethod, McRun, PrecisionReport, ReportMethod,
};
pub use model::{
    validate_model, GradedItem, GradedModel, HurdleIrtreeModel, HurdlePair, LatentDistribution, LatentScore,
    LinearFactorModel, ModelSpec, PatternMatrix, ResponsePattern, ScoreDefinition, TwoPlModel, MISSING_CODE,
};
pub use quadrature::{GridConfig, QuadratureGrid, QuadratureRule, DEFAULT_PATTERN_CAP};
pub use regression::RegressionFit;
pub use simulation::McSample;
