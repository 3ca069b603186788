//! Sensitivity analysis for survivor local average treatment effects with
//! instrumental variables when the outcome is censored by death.
//!
//! The estimand is the average treatment effect among compliers who would
//! survive under either treatment. Identification weights observed
//! complier-survivor contrasts by the instrument propensity score and a
//! logistic mixing model with an analyst-fixed slope; the mixing intercept
//! is pinned down by equating two routes to the complier always-survivor
//! proportion. The crate provides:
//!
//! - the mixing model and stable logistic primitives ([`mixing`]),
//! - propensity fitting by maximum likelihood and covariate balancing
//!   ([`propensity`]),
//! - the weighted moments, intercept solve, plug-in estimator, and the
//!   joint propensity/intercept GMM fit ([`estimator`]),
//! - percentile bootstrap intervals and sensitivity sweeps over the slope,
//! - synthetic designs with a deterministic replication harness
//!   ([`simulation`]).
//!
//! Estimation failures that are properties of the data (no intercept root,
//! joint fit off tolerance, degenerate denominator) are reported as
//! statuses so that sweeps and replication studies run to completion;
//! configuration and fitting defects are errors.

pub mod data;
pub mod error;
pub mod estimator;
pub mod mixing;
pub mod propensity;
pub mod simulation;

mod linalg;
mod rng;

pub use data::{censored_outcome_reads, Dataset, ObservationRow};
pub use error::{DataError, EstimatorError, PropensityError, SimulationError};
pub use estimator::alpha::{solve_alpha, AlphaSolution};
pub use estimator::bootstrap::{
    bootstrap_ci, BootstrapSettings, ConfidenceInterval, MIN_BOOTSTRAP_REPLICATES,
};
pub use estimator::gmm::{fit_cbps2_joint, fit_cbps2_joint_from, Cbps2Fit};
pub use estimator::late::{
    estimate_late, estimate_late_at_propensity, estimate_late_plugin, EstimateDiagnostics,
    EstimateStatus, LateEstimate, Method,
};
pub use estimator::moments::{
    estimate_pr_co_survive_treated, estimate_pr_coas, h_alpha, weighted_complier_moment, MomentArm,
    WeightedMoments,
};
pub use estimator::sweep::{sensitivity_sweep, SweepResult};
pub use mixing::{expit, logit, mixing_weight, MixingModel};
pub use propensity::{fit_cbps_balance, fit_logistic_mle, PropensityFit, PropensityMethod};
pub use simulation::generate::{
    generate_dataset, generate_dataset_with_classes, true_propensities,
};
pub use simulation::replicate::{replicate, ReplicationSummary};
pub use simulation::scenario::{
    derive_outcome_probs, CompositeClass, DerivedProbs, ScenarioConfig, StratumProportions,
};
