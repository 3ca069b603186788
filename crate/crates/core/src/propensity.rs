//! Instrument propensity score estimation.
//!
//! Two fitting routes share the logistic link `e(x) = expit(g0 + g'x)`:
//! maximum likelihood via iteratively reweighted least squares, and a
//! just-identified covariate-balancing fit that zeroes the inverse-weighted
//! covariate contrast between the two instrument arms. Both verify their
//! defining moment conditions from scratch after the optimizer finishes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::PropensityError;
use crate::linalg::{lu_solve, SquareMat};
use crate::mixing::expit;
use crate::rng::seeded_rng;

const MLE_SCORE_TOL: f64 = 1e-9;
const BALANCE_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 100;
const MAX_RESTARTS: usize = 5;

/// Which fitting route produced a [`PropensityFit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropensityMethod {
    /// Maximum likelihood logistic regression.
    Mle,
    /// Just-identified covariate balancing fit.
    CbpsBalance,
    /// Covariate balancing fit produced by the joint estimation of the
    /// propensity coefficients and the mixing intercept.
    CbpsJoint,
}

/// Fitted propensity model: intercept-first coefficient vector plus
/// convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityFit {
    pub gamma: Vec<f64>,
    pub method: PropensityMethod,
    pub converged: bool,
    pub iterations: usize,
    /// Max absolute entry of the defining moment vector (score for MLE,
    /// balance contrast for CBPS), re-evaluated after fitting.
    pub max_abs_moment: f64,
}

impl PropensityFit {
    /// Fitted probability at a covariate vector.
    pub fn predict(&self, x: &[f64]) -> Result<f64, PropensityError> {
        if x.len() + 1 != self.gamma.len() {
            return Err(PropensityError::DimensionMismatch {
                expected: self.gamma.len() - 1,
                got: x.len(),
            });
        }
        Ok(expit(linear_predictor(&self.gamma, x)))
    }

    /// Fitted probabilities for every row of a dataset.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>, PropensityError> {
        data.rows()
            .iter()
            .map(|row| self.predict(row.covariates()))
            .collect()
    }
}

#[inline]
fn linear_predictor(gamma: &[f64], x: &[f64]) -> f64 {
    let mut eta = gamma[0];
    for (g, v) in gamma[1..].iter().zip(x) {
        eta += g * v;
    }
    eta
}

fn fitted_probs(data: &Dataset, gamma: &[f64]) -> Vec<f64> {
    data.rows()
        .iter()
        .map(|row| expit(linear_predictor(gamma, row.covariates())))
        .collect()
}

/// Mean score vector `(1/N) sum (z_i - e_i) [1, x_i]`.
fn score_vector(data: &Dataset, gamma: &[f64]) -> Vec<f64> {
    let k = gamma.len();
    let inv_n = 1.0 / data.n() as f64;
    let mut score = vec![0.0; k];
    for row in data.rows() {
        let e = expit(linear_predictor(gamma, row.covariates()));
        let resid = (row.instrument() as u8 as f64 - e) * inv_n;
        score[0] += resid;
        for (j, v) in row.covariates().iter().enumerate() {
            score[j + 1] += resid * v;
        }
    }
    score
}

/// Mean balance contrast `(1/N) sum [1, x_i] (z_i/e_i - (1-z_i)/(1-e_i))`.
pub(crate) fn balance_moments(data: &Dataset, gamma: &[f64]) -> Vec<f64> {
    let k = gamma.len();
    let inv_n = 1.0 / data.n() as f64;
    let mut m = vec![0.0; k];
    for row in data.rows() {
        let e = expit(linear_predictor(gamma, row.covariates()));
        let w = if row.instrument() {
            1.0 / e
        } else {
            -1.0 / (1.0 - e)
        } * inv_n;
        m[0] += w;
        for (j, v) in row.covariates().iter().enumerate() {
            m[j + 1] += w * v;
        }
    }
    m
}

fn log_likelihood(data: &Dataset, gamma: &[f64]) -> f64 {
    let mut ll = 0.0;
    for row in data.rows() {
        let eta = linear_predictor(gamma, row.covariates());
        // log expit(eta) and log expit(-eta) without overflow.
        let log_p = if eta >= 0.0 {
            -(-eta).exp().ln_1p()
        } else {
            eta - eta.exp().ln_1p()
        };
        let log_q = if eta >= 0.0 {
            -eta - (-eta).exp().ln_1p()
        } else {
            -eta.exp().ln_1p()
        };
        ll += if row.instrument() { log_p } else { log_q };
    }
    ll
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn check_arms(data: &Dataset) -> Result<(), PropensityError> {
    // A single instrument arm maximizes the likelihood at infinity.
    if data.has_both_arms() {
        Ok(())
    } else {
        Err(PropensityError::Separation)
    }
}

/// Complete separation: the current coefficients classify every row
/// perfectly with a wide margin, so the likelihood supremum is at
/// infinity and no finite maximizer exists.
fn is_separated(data: &Dataset, gamma: &[f64]) -> bool {
    data.rows().iter().all(|row| {
        let eta = linear_predictor(gamma, row.covariates());
        if row.instrument() {
            eta >= 15.0
        } else {
            eta <= -15.0
        }
    })
}

/// Maximum likelihood logistic fit of `Pr(Z=1 | X)` by iteratively
/// reweighted least squares with step halving.
pub fn fit_logistic_mle(data: &Dataset) -> Result<PropensityFit, PropensityError> {
    check_arms(data)?;
    let k = data.p() + 1;
    let mut gamma = vec![0.0; k];
    let mut ll = log_likelihood(data, &gamma);

    for iteration in 1..=MAX_ITERATIONS {
        let probs = fitted_probs(data, &gamma);

        // Weighted normal equations: (X'WX) delta = X'(z - p).
        let mut info = SquareMat::zeros(k);
        let mut grad = vec![0.0; k];
        for (row, &e) in data.rows().iter().zip(&probs) {
            let w = e * (1.0 - e);
            let resid = row.instrument() as u8 as f64 - e;
            let x = row.covariates();
            // Intercept-first design column access.
            for a in 0..k {
                let xa = if a == 0 { 1.0 } else { x[a - 1] };
                grad[a] += resid * xa;
                for b in a..k {
                    let xb = if b == 0 { 1.0 } else { x[b - 1] };
                    info.add(a, b, w * xa * xb);
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                let v = info.get(b, a);
                info.set(a, b, v);
            }
        }

        let delta = lu_solve(&info, &grad).ok_or(PropensityError::SingularDesign)?;

        // Step halving on the log likelihood.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate: Vec<f64> = gamma
                .iter()
                .zip(&delta)
                .map(|(g, d)| g + step * d)
                .collect();
            let cand_ll = log_likelihood(data, &candidate);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                gamma = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        let score = score_vector(data, &gamma);
        if max_abs(&score) < MLE_SCORE_TOL {
            if is_separated(data, &gamma) {
                return Err(PropensityError::Separation);
            }
            let final_score = score_vector(data, &gamma);
            return Ok(PropensityFit {
                gamma,
                method: PropensityMethod::Mle,
                converged: true,
                iterations: iteration,
                max_abs_moment: max_abs(&final_score),
            });
        }

        // Diverging coefficients with boundary probabilities: abort before
        // the score drifts to convergence on the likelihood plateau.
        let norm = max_abs(&gamma);
        if norm > 100.0 {
            let probs = fitted_probs(data, &gamma);
            let boundary = probs.iter().any(|&e| !(1e-12..=1.0 - 1e-12).contains(&e));
            if boundary && is_separated(data, &gamma) {
                return Err(PropensityError::Separation);
            }
        }
        if !accepted {
            return Err(if is_separated(data, &gamma) {
                PropensityError::Separation
            } else {
                PropensityError::NoConvergence {
                    iterations: iteration,
                    residual: max_abs(&score),
                }
            });
        }
    }

    Err(PropensityError::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: max_abs(&score_vector(data, &gamma)),
    })
}

/// Numerical Jacobian of the balance moment map by central differences.
fn balance_jacobian(data: &Dataset, gamma: &[f64]) -> SquareMat {
    let k = gamma.len();
    let mut jac = SquareMat::zeros(k);
    let mut point = gamma.to_vec();
    for j in 0..k {
        let h = 1e-6 * point[j].abs().max(1.0);
        let orig = point[j];
        point[j] = orig + h;
        let plus = balance_moments(data, &point);
        point[j] = orig - h;
        let minus = balance_moments(data, &point);
        point[j] = orig;
        for i in 0..k {
            jac.set(i, j, (plus[i] - minus[i]) / (2.0 * h));
        }
    }
    jac
}

/// Covariate balancing fit: damped Newton on the just-identified balance
/// moment system, warm started at the maximum likelihood coefficients,
/// with jittered restarts when a path stalls.
pub fn fit_cbps_balance(data: &Dataset) -> Result<PropensityFit, PropensityError> {
    check_arms(data)?;
    let warm = fit_logistic_mle(data)?;
    let k = warm.gamma.len();
    let mut rng = seeded_rng(0x5ba1_a9ce);

    let mut total_iterations = 0usize;
    let mut best: Option<(Vec<f64>, f64)> = None;

    for restart in 0..=MAX_RESTARTS {
        let mut gamma = if restart == 0 {
            warm.gamma.clone()
        } else {
            // Restart from a random point in the unit ball around the warm start.
            warm.gamma
                .iter()
                .map(|g| g + rng.random_range(-1.0..1.0))
                .collect()
        };
        let mut norm = max_abs(&balance_moments(data, &gamma));

        for _ in 0..MAX_ITERATIONS {
            total_iterations += 1;
            if norm < BALANCE_TOL * 0.1 {
                break;
            }
            let jac = balance_jacobian(data, &gamma);
            let m = balance_moments(data, &gamma);
            let neg_m: Vec<f64> = m.iter().map(|v| -v).collect();
            let Some(delta) = lu_solve(&jac, &neg_m) else {
                break;
            };
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let candidate: Vec<f64> = gamma
                    .iter()
                    .zip(&delta)
                    .map(|(g, d)| g + step * d)
                    .collect();
                let cand_norm = max_abs(&balance_moments(data, &candidate));
                if cand_norm.is_finite() && cand_norm < norm {
                    gamma = candidate;
                    norm = cand_norm;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }

        if best.as_ref().is_none_or(|(_, b)| norm < *b) {
            best = Some((gamma.clone(), norm));
        }
        if norm < BALANCE_TOL * 0.1 {
            break;
        }
    }

    let (gamma, _) = best.expect("at least one restart ran");
    // Independent re-evaluation of the balance condition.
    let residual = max_abs(&balance_moments(data, &gamma));
    if residual > BALANCE_TOL {
        if k > 0 && lu_solve(&balance_jacobian(data, &gamma), &vec![0.0; k]).is_none() {
            return Err(PropensityError::SingularDesign);
        }
        return Err(PropensityError::NoConvergence {
            iterations: total_iterations,
            residual,
        });
    }
    Ok(PropensityFit {
        gamma,
        method: PropensityMethod::CbpsBalance,
        converged: true,
        iterations: total_iterations,
        max_abs_moment: residual,
    })
}
