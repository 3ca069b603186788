//! Plug-in estimation of the survivor local average treatment effect and
//! the composed estimation pipelines.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::EstimatorError;
use crate::estimator::alpha::solve_alpha;
use crate::estimator::gmm::fit_cbps2_joint;
use crate::estimator::moments::{HProfile, WeightedMoments};
use crate::mixing::MixingModel;
use crate::propensity::{fit_cbps_balance, fit_logistic_mle, PropensityFit};

const DENOMINATOR_TOL: f64 = 1e-12;
/// Fitted probabilities beyond these bounds flag the extreme-weight
/// diagnostic; they are never truncated.
const EXTREME_PROPENSITY: f64 = 1e-6;

/// Estimation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Maximum likelihood propensity, sequential intercept solve.
    Glm3,
    /// Covariate balancing propensity, sequential intercept solve.
    Cbps3,
    /// Joint estimation of propensity coefficients and mixing intercept.
    Cbps2,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Glm3 => "glm3",
            Method::Cbps3 => "cbps3",
            Method::Cbps2 => "cbps2",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "glm3" => Ok(Method::Glm3),
            "cbps3" => Ok(Method::Cbps3),
            "cbps2" => Ok(Method::Cbps2),
            other => Err(format!(
                "unknown method `{other}` (expected glm3, cbps3, or cbps2)"
            )),
        }
    }
}

/// Outcome of an estimation attempt. Statistical failures are statuses,
/// not errors: a sweep or replication harness records them and moves on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Ok,
    NoRootForAlpha,
    GmmNoConvergence,
    DegenerateDenominator,
}

impl EstimateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateStatus::Ok => "ok",
            EstimateStatus::NoRootForAlpha => "no_root_for_alpha",
            EstimateStatus::GmmNoConvergence => "gmm_no_convergence",
            EstimateStatus::DegenerateDenominator => "degenerate_denominator",
        }
    }
}

/// Post-fit diagnostics carried alongside an estimate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimateDiagnostics {
    /// Max absolute defining moment of the propensity fit (score or balance).
    pub propensity_moment_norm: Option<f64>,
    pub propensity_iterations: Option<usize>,
    /// `h` re-evaluated at the solved or jointly fitted intercept.
    pub h_at_alpha: Option<f64>,
    /// Leftmost root returned although the scan found several.
    pub multiple_roots: bool,
    /// Rows with fitted propensity within 1e-6 of 0 or 1 (flagged, not clipped).
    pub extreme_propensity_rows: usize,
    /// Final joint GMM objective value, when the joint route ran.
    pub gmm_objective: Option<f64>,
    /// The GMM weighting matrix was near singular and was pseudo-inverted.
    pub gmm_weighting_singular: bool,
}

/// A survivor LATE estimate at one assumed sensitivity slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateEstimate {
    pub beta: f64,
    pub alpha_hat: Option<f64>,
    pub late_hat: Option<f64>,
    /// Denominator of the plug-in ratio: the complier always-survivor
    /// proportion estimate.
    pub pr_coas_hat: Option<f64>,
    pub method: Method,
    pub status: EstimateStatus,
    pub diagnostics: EstimateDiagnostics,
}

fn count_extreme(e_hat: &[f64]) -> usize {
    e_hat
        .iter()
        .filter(|&&e| !(EXTREME_PROPENSITY..=1.0 - EXTREME_PROPENSITY).contains(&e))
        .count()
}

/// Plug-in estimate at a fully specified mixing model and propensity vector.
///
/// Numerator: `(1/N) sum Y S (w(Y)D + 1-D) [Z/e - (1-Z)/(1-e)]`;
/// denominator: the untreated complier-survivor proportion estimate.
pub fn estimate_late_plugin(
    data: &Dataset,
    e_hat: &[f64],
    model: &MixingModel,
    method: Method,
) -> Result<LateEstimate, EstimatorError> {
    let moments = WeightedMoments::compute(data, e_hat, model)?;
    let numerator = moments.numerator_y1 - moments.numerator_y0;
    let denominator = moments.pr_coas_hat;

    let diagnostics = EstimateDiagnostics {
        extreme_propensity_rows: count_extreme(e_hat),
        ..EstimateDiagnostics::default()
    };
    if denominator.abs() < DENOMINATOR_TOL {
        return Ok(LateEstimate {
            beta: model.beta,
            alpha_hat: None,
            late_hat: None,
            pr_coas_hat: Some(denominator),
            method,
            status: EstimateStatus::DegenerateDenominator,
            diagnostics,
        });
    }
    Ok(LateEstimate {
        beta: model.beta,
        alpha_hat: Some(model.alpha),
        late_hat: Some(numerator / denominator),
        pr_coas_hat: Some(denominator),
        method,
        status: EstimateStatus::Ok,
        diagnostics,
    })
}

pub(crate) fn sequential_estimate(
    data: &Dataset,
    beta: f64,
    method: Method,
    fit: &PropensityFit,
) -> Result<LateEstimate, EstimatorError> {
    let e_hat = fit.predict_dataset(data)?;
    let profile = HProfile::new(data, &e_hat, beta)?;
    let mut diagnostics = EstimateDiagnostics {
        propensity_moment_norm: Some(fit.max_abs_moment),
        propensity_iterations: Some(fit.iterations),
        extreme_propensity_rows: count_extreme(&e_hat),
        ..EstimateDiagnostics::default()
    };
    match crate::estimator::alpha::solve_on_profile(&profile) {
        Ok(solution) => {
            let model = MixingModel::new(solution.alpha, beta)?;
            let mut estimate = estimate_late_plugin(data, &e_hat, &model, method)?;
            diagnostics.h_at_alpha = Some(solution.h_at_alpha);
            diagnostics.multiple_roots = solution.multiple_roots;
            estimate.diagnostics = diagnostics;
            Ok(estimate)
        }
        Err(EstimatorError::NoRootForAlpha { .. }) => Ok(LateEstimate {
            beta,
            alpha_hat: None,
            late_hat: None,
            pr_coas_hat: Some(profile.b_hat),
            method,
            status: EstimateStatus::NoRootForAlpha,
            diagnostics,
        }),
        Err(other) => Err(other),
    }
}

/// Full estimation pipeline for one assumed slope.
///
/// Statistical failures (no intercept root, joint fit off tolerance,
/// degenerate denominator) come back as statuses; configuration and fitting
/// errors propagate as errors.
pub fn estimate_late(
    data: &Dataset,
    beta: f64,
    method: Method,
) -> Result<LateEstimate, EstimatorError> {
    match method {
        Method::Glm3 => {
            let fit = fit_logistic_mle(data)?;
            sequential_estimate(data, beta, method, &fit)
        }
        Method::Cbps3 => {
            let fit = fit_cbps_balance(data)?;
            sequential_estimate(data, beta, method, &fit)
        }
        Method::Cbps2 => match fit_cbps2_joint(data, beta) {
            Ok(joint) => {
                let e_hat = joint.fit.predict_dataset(data)?;
                let model = MixingModel::new(joint.alpha, beta)?;
                let mut estimate = estimate_late_plugin(data, &e_hat, &model, method)?;
                estimate.diagnostics.propensity_moment_norm = Some(joint.fit.max_abs_moment);
                estimate.diagnostics.propensity_iterations = Some(joint.fit.iterations);
                estimate.diagnostics.h_at_alpha = Some(crate::estimator::moments::h_alpha(
                    data,
                    &e_hat,
                    joint.alpha,
                    beta,
                )?);
                estimate.diagnostics.gmm_objective = Some(joint.objective);
                estimate.diagnostics.gmm_weighting_singular = joint.weighting_singular;
                Ok(estimate)
            }
            Err(EstimatorError::GmmNoConvergence { best_q }) => Ok(LateEstimate {
                beta,
                alpha_hat: None,
                late_hat: None,
                pr_coas_hat: None,
                method,
                status: EstimateStatus::GmmNoConvergence,
                diagnostics: EstimateDiagnostics {
                    gmm_objective: Some(best_q),
                    ..EstimateDiagnostics::default()
                },
            }),
            Err(other) => Err(other),
        },
    }
}

/// Three-step estimate with an externally supplied propensity vector
/// (for example the known truth of a simulation design): solve the
/// intercept on the given propensities, then plug in.
pub fn estimate_late_at_propensity(
    data: &Dataset,
    e_hat: &[f64],
    beta: f64,
    method: Method,
) -> Result<LateEstimate, EstimatorError> {
    let solution = solve_alpha(data, e_hat, beta)?;
    let model = MixingModel::new(solution.alpha, beta)?;
    let mut estimate = estimate_late_plugin(data, e_hat, &model, method)?;
    estimate.diagnostics.h_at_alpha = Some(solution.h_at_alpha);
    estimate.diagnostics.multiple_roots = solution.multiple_roots;
    Ok(estimate)
}
