//! Joint estimation of the propensity coefficients and the mixing
//! intercept by efficient GMM on the extended balance system.
//!
//! The extended regressor appends the survivor weight
//! `W = S (w(Y) D + 1 - D)` to the intercept and covariates, so the moment
//! vector stacks the covariate balance contrasts with the mixing-intercept
//! profile. The weighting matrix depends on the parameters and is
//! re-evaluated together with the moments at every trial point.

use rand::Rng;

use crate::data::Dataset;
use crate::error::EstimatorError;
use crate::estimator::alpha::solve_alpha;
use crate::linalg::{lu_solve, pinv_quadratic_form, SquareMat};
use crate::mixing::expit;
use crate::propensity::{fit_logistic_mle, PropensityFit, PropensityMethod};
use crate::rng::seeded_rng;

/// Objective below this is a fully converged joint fit (an exact zero of
/// the moment system, attainable whenever the intercept equation has a
/// root at the balance coefficients).
const Q_CONVERGED: f64 = 1e-12;
/// Relative eigenvalue cutoff for pseudo-inverting the weighting matrix.
const SIGMA_CUTOFF: f64 = 1e-12;
/// Condition number beyond which the weighting matrix is flagged.
const SIGMA_COND_LIMIT: f64 = 1e12;
const MAX_ITERATIONS: usize = 100;
const MAX_RESTARTS: usize = 5;
/// Intercept magnitude beyond which the logistic weight is saturated for
/// any bounded outcome; trial points outside are rejected.
const ALPHA_LIMIT: f64 = 60.0;

/// Result of the joint fit: a propensity fit over the covariates plus the
/// mixing intercept that balances the survivor weight.
///
/// When the moment system has an exact zero the objective is numerically
/// zero and `fit.converged` is set. When it has none (the same samples on
/// which the sequential intercept solve fails), the returned point is the
/// weighted compromise minimizer and the objective stays positive; the
/// joint route still yields an estimate there, which is its purpose.
#[derive(Debug, Clone, PartialEq)]
pub struct Cbps2Fit {
    pub fit: PropensityFit,
    pub alpha: f64,
    /// Final value of the weighted moment objective.
    pub objective: f64,
    /// The weighting matrix was near singular and pseudo-inversion dropped
    /// part of its spectrum.
    pub weighting_singular: bool,
}

struct JointProblem<'a> {
    data: &'a Dataset,
    beta: f64,
    /// Parameter and moment dimension: p + 2.
    dim: usize,
}

impl<'a> JointProblem<'a> {
    fn new(data: &'a Dataset, beta: f64) -> Self {
        Self {
            data,
            beta,
            dim: data.p() + 2,
        }
    }

    fn survivor_weight(&self, theta: &[f64], row: &crate::data::ObservationRow) -> f64 {
        if !row.survived() {
            0.0
        } else if row.treatment() {
            expit(theta[self.dim - 1] + self.beta * row.observed_outcome())
        } else {
            1.0
        }
    }

    /// Moment vector at `theta`, or `None` when a fitted propensity
    /// saturates and the weights are undefined.
    fn moments(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let k = self.dim;
        if theta[k - 1].abs() > ALPHA_LIMIT {
            return None;
        }
        let inv_n = 1.0 / self.data.n() as f64;
        let mut g = vec![0.0; k];
        for row in self.data.rows() {
            let x = row.covariates();
            let mut eta = theta[0];
            for (t, v) in theta[1..k - 1].iter().zip(x) {
                eta += t * v;
            }
            let e = expit(eta);
            if !(e > 0.0 && e < 1.0) {
                return None;
            }
            let sw = if row.instrument() {
                1.0 / e
            } else {
                -1.0 / (1.0 - e)
            } * inv_n;
            g[0] += sw;
            for (j, v) in x.iter().enumerate() {
                g[j + 1] += sw * v;
            }
            g[k - 1] += sw * self.survivor_weight(theta, row);
        }
        Some(g)
    }

    /// Moments plus the weighting matrix `(1/N) sum xx' / (e(1-e))`.
    fn moments_and_weighting(&self, theta: &[f64]) -> Option<(Vec<f64>, SquareMat)> {
        let k = self.dim;
        if theta[k - 1].abs() > ALPHA_LIMIT {
            return None;
        }
        let inv_n = 1.0 / self.data.n() as f64;
        let mut g = vec![0.0; k];
        let mut sigma = SquareMat::zeros(k);
        let mut xt = vec![0.0; k];
        for row in self.data.rows() {
            let x = row.covariates();
            let mut eta = theta[0];
            for (t, v) in theta[1..k - 1].iter().zip(x) {
                eta += t * v;
            }
            let e = expit(eta);
            if !(e > 0.0 && e < 1.0) {
                return None;
            }
            xt[0] = 1.0;
            xt[1..k - 1].copy_from_slice(x);
            xt[k - 1] = self.survivor_weight(theta, row);

            let sw = if row.instrument() {
                1.0 / e
            } else {
                -1.0 / (1.0 - e)
            } * inv_n;
            let var_w = inv_n / (e * (1.0 - e));
            for a in 0..k {
                g[a] += sw * xt[a];
                let row_scale = var_w * xt[a];
                for (b, &xb) in xt.iter().enumerate().skip(a) {
                    sigma.add(a, b, row_scale * xb);
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                let v = sigma.get(b, a);
                sigma.set(a, b, v);
            }
        }
        Some((g, sigma))
    }

    /// Weighted objective `g' pinv(Sigma) g` with its singularity flag.
    fn objective(&self, theta: &[f64]) -> Option<(f64, bool)> {
        let (g, sigma) = self.moments_and_weighting(theta)?;
        let (q, cond) = pinv_quadratic_form(&sigma, &g, SIGMA_CUTOFF);
        Some((q, cond > SIGMA_COND_LIMIT))
    }

    /// Central-difference Jacobian of the moment map.
    fn jacobian(&self, theta: &[f64]) -> Option<SquareMat> {
        let k = self.dim;
        let mut jac = SquareMat::zeros(k);
        let mut point = theta.to_vec();
        for j in 0..k {
            let h = 1e-6 * point[j].abs().max(1.0);
            let orig = point[j];
            point[j] = orig + h;
            let plus = self.moments(&point)?;
            point[j] = orig - h;
            let minus = self.moments(&point)?;
            point[j] = orig;
            for i in 0..k {
                jac.set(i, j, (plus[i] - minus[i]) / (2.0 * h));
            }
        }
        Some(jac)
    }

    /// Minimize the objective from one start; returns the best point found
    /// on this path with its objective and singularity flag.
    fn minimize_from(
        &self,
        start: Vec<f64>,
        iterations_used: &mut usize,
    ) -> Option<(Vec<f64>, f64, bool)> {
        let k = self.dim;
        let mut theta = start;
        let (mut q, mut singular) = self.objective(&theta)?;

        for _ in 0..MAX_ITERATIONS {
            *iterations_used += 1;
            if q < Q_CONVERGED * 0.1 {
                break;
            }
            let g = self.moments(&theta)?;
            let Some(jac) = self.jacobian(&theta) else {
                break;
            };
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();

            // Newton direction on the moment system; Levenberg-Marquardt
            // damping when the Jacobian is singular (a saturated weight
            // zeroes the intercept column).
            let delta = match lu_solve(&jac, &neg_g) {
                Some(d) => d,
                None => {
                    let mut jtj = SquareMat::zeros(k);
                    let mut jtg = vec![0.0; k];
                    for (a, jtg_a) in jtg.iter_mut().enumerate() {
                        for b in 0..k {
                            let mut acc = 0.0;
                            for i in 0..k {
                                acc += jac.get(i, a) * jac.get(i, b);
                            }
                            jtj.set(a, b, acc);
                        }
                        *jtg_a = (0..k).map(|i| jac.get(i, a) * neg_g[i]).sum();
                    }
                    let scale = (0..k)
                        .map(|a| jtj.get(a, a))
                        .fold(0.0f64, f64::max)
                        .max(1e-12);
                    let mut lambda = 1e-8 * scale;
                    let mut solved = None;
                    for _ in 0..20 {
                        let mut damped = jtj.clone();
                        for a in 0..k {
                            damped.add(a, a, lambda);
                        }
                        if let Some(d) = lu_solve(&damped, &jtg) {
                            solved = Some(d);
                            break;
                        }
                        lambda *= 10.0;
                    }
                    solved?
                }
            };

            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let candidate: Vec<f64> = theta
                    .iter()
                    .zip(&delta)
                    .map(|(t, d)| t + step * d)
                    .collect();
                if let Some((cand_q, cand_singular)) = self.objective(&candidate) {
                    if cand_q < q {
                        theta = candidate;
                        q = cand_q;
                        singular = cand_singular;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        Some((theta, q, singular))
    }
}

/// Jointly fit the propensity coefficients and the mixing intercept at a
/// fixed sensitivity slope.
///
/// Warm started at the maximum likelihood coefficients with the
/// sequentially solved intercept when one exists (zero otherwise), then
/// minimized by damped Newton steps on the moment system with an
/// objective-decrease line search and jittered restarts.
pub fn fit_cbps2_joint(data: &Dataset, beta: f64) -> Result<Cbps2Fit, EstimatorError> {
    let warm = fit_logistic_mle(data)?;
    fit_cbps2_joint_from(data, beta, &warm)
}

/// [`fit_cbps2_joint`] with the maximum likelihood warm start supplied by
/// the caller, for harnesses that evaluate many slopes on one dataset.
pub fn fit_cbps2_joint_from(
    data: &Dataset,
    beta: f64,
    warm: &PropensityFit,
) -> Result<Cbps2Fit, EstimatorError> {
    let e_mle = warm.predict_dataset(data)?;
    let alpha0 = match solve_alpha(data, &e_mle, beta) {
        Ok(solution) => solution.alpha,
        Err(EstimatorError::NoRootForAlpha { .. }) => 0.0,
        Err(other) => return Err(other),
    };

    let problem = JointProblem::new(data, beta);
    let mut start = warm.gamma.clone();
    start.push(alpha0);

    let mut rng = seeded_rng(0xcb25_0002);
    let mut iterations = 0usize;
    let mut best: Option<(Vec<f64>, f64, bool)> = None;

    for restart in 0..=MAX_RESTARTS {
        let candidate_start: Vec<f64> = if restart == 0 {
            start.clone()
        } else {
            start
                .iter()
                .map(|t| t + rng.random_range(-0.5..0.5))
                .collect()
        };
        if let Some(result) = problem.minimize_from(candidate_start, &mut iterations) {
            let better = best.as_ref().is_none_or(|(_, bq, _)| result.1 < *bq);
            if better {
                best = Some(result);
            }
        }
        if best.as_ref().is_some_and(|(_, q, _)| *q < Q_CONVERGED) {
            break;
        }
    }

    let Some((theta, q, singular)) = best else {
        return Err(EstimatorError::GmmNoConvergence {
            best_q: f64::INFINITY,
        });
    };

    // Independent re-evaluation of the balance system at the solution.
    let g = problem
        .moments(&theta)
        .ok_or(EstimatorError::GmmNoConvergence {
            best_q: f64::INFINITY,
        })?;
    let max_abs_moment = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let k = theta.len();
    Ok(Cbps2Fit {
        fit: PropensityFit {
            gamma: theta[..k - 1].to_vec(),
            method: PropensityMethod::CbpsJoint,
            converged: q < Q_CONVERGED,
            iterations,
            max_abs_moment,
        },
        alpha: theta[k - 1],
        objective: q,
        weighting_singular: singular,
    })
}
