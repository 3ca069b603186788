//! Nonparametric bootstrap confidence intervals for the survivor LATE.
//!
//! Row-resampling percentile bootstrap. Replicates whose estimation fails
//! are dropped and counted, mirroring how the replication summaries treat
//! failed solves. Replicate generators derive from (seed, replicate index),
//! so parallel and serial runs produce bit-identical intervals.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::EstimatorError;
use crate::estimator::late::{estimate_late, EstimateStatus, Method};
use crate::rng::stream_rng;

/// Minimum replicate count accepted by [`bootstrap_ci`].
pub const MIN_BOOTSTRAP_REPLICATES: usize = 50;

/// Bootstrap configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    /// Number of resampled replicates.
    pub replicates: usize,
    /// Two-sided coverage level, e.g. 0.95.
    pub level: f64,
    pub seed: u64,
}

impl BootstrapSettings {
    fn validate(&self) -> Result<(), EstimatorError> {
        if self.replicates < MIN_BOOTSTRAP_REPLICATES {
            return Err(EstimatorError::InvalidBootstrapSettings(format!(
                "need at least {MIN_BOOTSTRAP_REPLICATES} replicates, got {}",
                self.replicates
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(EstimatorError::InvalidBootstrapSettings(format!(
                "level must be inside (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

/// Percentile confidence interval from successful bootstrap replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub replicates_used: usize,
    pub replicates_failed: usize,
}

/// Linear-interpolation empirical quantile of a sorted sample.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    debug_assert!(m > 0);
    if m == 1 {
        return sorted[0];
    }
    let h = p * (m - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= m {
        return sorted[m - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Percentile bootstrap interval for the LATE at one assumed slope.
pub fn bootstrap_ci(
    data: &Dataset,
    beta: f64,
    method: Method,
    settings: &BootstrapSettings,
) -> Result<ConfidenceInterval, EstimatorError> {
    settings.validate()?;
    let n = data.n();
    let b = settings.replicates;

    let estimates: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|replicate| {
            let mut rng = stream_rng(settings.seed, replicate as u64);
            let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let resampled = data.resample(&indices);
            match estimate_late(&resampled, beta, method) {
                Ok(est) if est.status == EstimateStatus::Ok => est.late_hat,
                _ => None,
            }
        })
        .collect();

    let mut successes: Vec<f64> = estimates.iter().filter_map(|v| *v).collect();
    let failed = b - successes.len();
    let required = 30.0f64.max(b as f64 / 2.0);
    if (successes.len() as f64) < required {
        return Err(EstimatorError::TooFewSuccessfulReplicates {
            successes: successes.len(),
            attempted: b,
            required: required.ceil() as usize,
        });
    }

    successes.sort_by(|a, b| a.partial_cmp(b).expect("estimates are finite"));
    let tail = (1.0 - settings.level) / 2.0;
    Ok(ConfidenceInterval {
        level: settings.level,
        lower: quantile_sorted(&successes, tail),
        upper: quantile_sorted(&successes, 1.0 - tail),
        replicates_used: successes.len(),
        replicates_failed: failed,
    })
}
