//! Monte Carlo replication harness.
//!
//! Repeatedly generates scenario datasets and runs every requested
//! (assumed slope, method) cell, summarizing the successful estimates and
//! counting failures separately. Statistical failures are data, never
//! errors: means and standard deviations summarize successful replicates
//! only. Child seeds derive from (seed, replicate), so the harness is
//! deterministic and independent of execution parallelism.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SimulationError;
use crate::estimator::gmm::fit_cbps2_joint_from;
use crate::estimator::late::{EstimateStatus, Method};
use crate::estimator::sequential_estimate;
use crate::mixing::MixingModel;
use crate::propensity::{fit_cbps_balance, fit_logistic_mle};
use crate::rng::child_seed;
use crate::simulation::generate::generate_dataset;
use crate::simulation::scenario::ScenarioConfig;

/// Summary of one (scenario, assumed slope, method) replication cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub scenario: String,
    pub assumed_beta: f64,
    pub method: Method,
    /// Mean estimate over successful replicates; absent when none succeeded.
    pub mean_late: Option<f64>,
    /// Sample standard deviation over successful replicates (divisor
    /// successes - 1); zero when only one replicate succeeded.
    pub sd_late: Option<f64>,
    /// failures / replicates, exactly.
    pub fail_rate: f64,
    pub replicates: usize,
    pub successes: usize,
}

/// Run `r` replications of a scenario over a grid of assumed slopes and a
/// set of methods.
pub fn replicate(
    cfg: &ScenarioConfig,
    assumed_betas: &[f64],
    methods: &[Method],
    r: usize,
    seed: u64,
) -> Result<Vec<ReplicationSummary>, SimulationError> {
    if r == 0 {
        return Err(SimulationError::InvalidConfig(
            "need at least one replication".into(),
        ));
    }
    if assumed_betas.is_empty() || methods.is_empty() {
        return Err(SimulationError::InvalidConfig(
            "need at least one assumed slope and one method".into(),
        ));
    }
    cfg.validate()?;

    let cells = assumed_betas.len() * methods.len();
    let per_replicate: Vec<Vec<Option<f64>>> = (0..r)
        .into_par_iter()
        .map(|rep| {
            let data = match generate_dataset(cfg, child_seed(seed, rep as u64)) {
                Ok(data) => data,
                Err(_) => return vec![None; cells],
            };
            // Propensity fits do not depend on the assumed slope; fit once
            // per replicate and share across the grid.
            let mle = fit_logistic_mle(&data);
            let balance = if methods.contains(&Method::Cbps3) {
                Some(fit_cbps_balance(&data))
            } else {
                None
            };

            let mut out = Vec::with_capacity(cells);
            for &beta in assumed_betas {
                for &method in methods {
                    let estimate = match method {
                        Method::Glm3 => match &mle {
                            Ok(fit) => sequential_estimate(&data, beta, method, fit),
                            Err(e) => Err(e.clone().into()),
                        },
                        Method::Cbps3 => match balance.as_ref().expect("fitted above") {
                            Ok(fit) => sequential_estimate(&data, beta, method, fit),
                            Err(e) => Err(e.clone().into()),
                        },
                        Method::Cbps2 => match &mle {
                            Ok(fit) => fit_cbps2_joint_from(&data, beta, fit).and_then(|joint| {
                                let e_hat = joint.fit.predict_dataset(&data)?;
                                let model = MixingModel::new(joint.alpha, beta)?;
                                crate::estimator::late::estimate_late_plugin(
                                    &data, &e_hat, &model, method,
                                )
                            }),
                            Err(e) => Err(e.clone().into()),
                        },
                    };
                    out.push(match estimate {
                        Ok(est) if est.status == EstimateStatus::Ok => est.late_hat,
                        _ => None,
                    });
                }
            }
            out
        })
        .collect();

    let mut summaries = Vec::with_capacity(cells);
    for (bi, &beta) in assumed_betas.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            let cell = bi * methods.len() + mi;
            let values: Vec<f64> = per_replicate
                .iter()
                .filter_map(|rep_row| rep_row[cell])
                .collect();
            let successes = values.len();
            let failures = r - successes;
            let (mean_late, sd_late) = if successes == 0 {
                (None, None)
            } else {
                let mean = values.iter().sum::<f64>() / successes as f64;
                let sd = if successes > 1 {
                    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                    (ss / (successes - 1) as f64).sqrt()
                } else {
                    0.0
                };
                (Some(mean), Some(sd))
            };
            summaries.push(ReplicationSummary {
                scenario: cfg.id.clone(),
                assumed_beta: beta,
                method,
                mean_late,
                sd_late,
                fail_rate: failures as f64 / r as f64,
                replicates: r,
                successes,
            });
        }
    }
    Ok(summaries)
}
