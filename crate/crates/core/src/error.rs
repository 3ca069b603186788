//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while constructing or validating observation data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("dataset must contain at least one row")]
    EmptyDataset,
    #[error("row {row}: covariate vector has length {got}, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row}: covariates must be finite")]
    NonFiniteCovariate { row: usize },
    #[error("row {row}: outcome must be present exactly when the survival indicator is 1")]
    CensoringViolation { row: usize },
    #[error("row {row}: outcome must be finite")]
    NonFiniteOutcome { row: usize },
    #[error("mixing model parameters must be finite (alpha={alpha}, beta={beta})")]
    NonFiniteMixing { alpha: f64, beta: f64 },
}

/// Errors raised by instrument propensity score fitting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropensityError {
    #[error("design matrix [1, X] is rank deficient")]
    SingularDesign,
    #[error("instrument arms are separated: fitted probabilities at the 0/1 boundary with diverging coefficients")]
    Separation,
    #[error(
        "fit did not converge after {iterations} iterations (residual moment norm {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("covariate vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Errors raised by the moment, root-finding, and GMM estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("propensity score at row {row} is outside (0, 1)")]
    PropensityOutOfRange { row: usize },
    #[error("no root for the mixing intercept: the moment profile has no sign change on the search bracket (h ranges over [{h_min:.3e}, {h_max:.3e}])")]
    NoRootForAlpha { h_min: f64, h_max: f64 },
    #[error("joint balance minimization did not reach the objective tolerance (best objective {best_q:.3e})")]
    GmmNoConvergence { best_q: f64 },
    #[error(
        "too few successful bootstrap replicates: {successes} of {attempted}, required {required}"
    )]
    TooFewSuccessfulReplicates {
        successes: usize,
        attempted: usize,
        required: usize,
    },
    #[error("bootstrap settings invalid: {0}")]
    InvalidBootstrapSettings(String),
    #[error(transparent)]
    Propensity(#[from] PropensityError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Errors raised by scenario configuration and data generation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("scenario is infeasible: {0}")]
    InfeasibleScenario(String),
    #[error("a degenerate mixing slope requires an explicit survivor outcome probability")]
    MissingDegenerateProb,
    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),
}
