//! CLI error reporting with machine-readable codes.
//!
//! Exit-status policy: configuration, parse, IO, and hard estimation
//! errors are process failures (exit 1, JSON error document on stderr);
//! statistical failures (no intercept root, degenerate denominator,
//! dropped bootstrap replicates) are successful runs whose documents carry
//! failure status fields.

use std::fmt;

use latesens_core::{DataError, EstimatorError, PropensityError, SimulationError};

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn parse(line: usize, column: &str, message: impl fmt::Display) -> Self {
        Self {
            code: "parse_error",
            message: format!("line {line}, column `{column}`: {message}"),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self {
            code: "io_error",
            message: format!("{}: {err}", path.display()),
        }
    }

    /// JSON document printed to stderr on process failure.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "code": self.code, "message": self.message } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

pub fn estimator_code(err: &EstimatorError) -> &'static str {
    match err {
        EstimatorError::PropensityOutOfRange { .. } => "propensity_out_of_range",
        EstimatorError::NoRootForAlpha { .. } => "no_root_for_alpha",
        EstimatorError::GmmNoConvergence { .. } => "gmm_no_convergence",
        EstimatorError::TooFewSuccessfulReplicates { .. } => "too_few_successful_replicates",
        EstimatorError::InvalidBootstrapSettings(_) => "invalid_bootstrap_settings",
        EstimatorError::Propensity(p) => propensity_code(p),
        EstimatorError::Data(_) => "invalid_data",
    }
}

pub fn propensity_code(err: &PropensityError) -> &'static str {
    match err {
        PropensityError::SingularDesign => "singular_design",
        PropensityError::Separation => "separation",
        PropensityError::NoConvergence { .. } => "no_convergence",
        PropensityError::DimensionMismatch { .. } => "dimension_mismatch",
    }
}

impl From<EstimatorError> for CliError {
    fn from(err: EstimatorError) -> Self {
        CliError::new(estimator_code(&err), err.to_string())
    }
}

impl From<SimulationError> for CliError {
    fn from(err: SimulationError) -> Self {
        let code = match err {
            SimulationError::InfeasibleScenario(_) => "infeasible_scenario",
            SimulationError::MissingDegenerateProb => "missing_degenerate_prob",
            SimulationError::InvalidConfig(_) => "invalid_config",
        };
        CliError::new(code, err.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(err: DataError) -> Self {
        CliError::new("invalid_data", err.to_string())
    }
}
