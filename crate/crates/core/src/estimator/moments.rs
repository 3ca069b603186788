//! Inverse-probability-weighted complier-survivor moments.
//!
//! Every estimator in this crate reduces to contrasts of the form
//! `(1/N) sum g(Y) S D [Z/e - (1-Z)/(1-e)]` (treated survivors) and
//! `(1/N) sum g(Y) S (1-D) [(1-Z)/(1-e) - Z/e]` (untreated survivors).
//! Censored rows contribute exactly zero through the survival factor and
//! their outcome is never read.

use crate::data::Dataset;
use crate::error::EstimatorError;
use crate::mixing::expit;

/// Which complier-survivor arm a moment averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentArm {
    /// `(1/N) sum g(Y) S D [Z/e - (1-Z)/(1-e)]`
    TreatedSurvivor,
    /// `(1/N) sum g(Y) S (1-D) [(1-Z)/(1-e) - Z/e]`
    UntreatedSurvivor,
}

pub(crate) fn validate_propensities(data: &Dataset, e_hat: &[f64]) -> Result<(), EstimatorError> {
    if e_hat.len() != data.n() {
        return Err(EstimatorError::Propensity(
            crate::error::PropensityError::DimensionMismatch {
                expected: data.n(),
                got: e_hat.len(),
            },
        ));
    }
    for (row, &e) in e_hat.iter().enumerate() {
        if !(e > 0.0 && e < 1.0) || !e.is_finite() {
            return Err(EstimatorError::PropensityOutOfRange { row });
        }
    }
    Ok(())
}

/// Signed inverse-probability weight of a row: `Z/e - (1-Z)/(1-e)`.
#[inline]
pub(crate) fn signed_weight(z: bool, e: f64) -> f64 {
    if z {
        1.0 / e
    } else {
        -1.0 / (1.0 - e)
    }
}

/// Horvitz-Thompson moment of `g(Y)` over one complier-survivor arm.
pub fn weighted_complier_moment<G: Fn(f64) -> f64>(
    data: &Dataset,
    e_hat: &[f64],
    g: G,
    arm: MomentArm,
) -> Result<f64, EstimatorError> {
    validate_propensities(data, e_hat)?;
    let mut sum = 0.0;
    for (row, &e) in data.rows().iter().zip(e_hat) {
        if !row.survived() {
            continue;
        }
        match arm {
            MomentArm::TreatedSurvivor => {
                if row.treatment() {
                    sum += g(row.observed_outcome()) * signed_weight(row.instrument(), e);
                }
            }
            MomentArm::UntreatedSurvivor => {
                if !row.treatment() {
                    sum -= g(row.observed_outcome()) * signed_weight(row.instrument(), e);
                }
            }
        }
    }
    Ok(sum / data.n() as f64)
}

/// Estimate of the complier always-survivor proportion: the untreated
/// survivor moment with `g` identically one. Finite-sample values may be
/// negative; no range constraint is imposed.
pub fn estimate_pr_coas(data: &Dataset, e_hat: &[f64]) -> Result<f64, EstimatorError> {
    weighted_complier_moment(data, e_hat, |_| 1.0, MomentArm::UntreatedSurvivor)
}

/// Estimate of the treated complier-survivor proportion: the treated
/// survivor moment with `g` identically one.
pub fn estimate_pr_co_survive_treated(
    data: &Dataset,
    e_hat: &[f64],
) -> Result<f64, EstimatorError> {
    weighted_complier_moment(data, e_hat, |_| 1.0, MomentArm::TreatedSurvivor)
}

/// The four inverse-weighted sums the plug-in ratio is built from, at a
/// fully specified mixing model.
///
/// These are finite-sample estimates of probabilities and truncated
/// means; no sign or range constraint is imposed (the complier-survivor
/// proportion estimates can order the wrong way purely through propensity
/// estimation noise, which is exactly the sequential route's documented
/// failure mode).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMoments {
    /// Complier always-survivor proportion estimate (untreated route).
    pub pr_coas_hat: f64,
    /// Treated complier-survivor proportion estimate.
    pub pr_co_survive_treated_hat: f64,
    /// Untreated-arm outcome term of the effect numerator.
    pub numerator_y0: f64,
    /// Treated-arm mixing-weighted outcome term of the effect numerator.
    pub numerator_y1: f64,
}

impl WeightedMoments {
    pub fn compute(
        data: &Dataset,
        e_hat: &[f64],
        model: &crate::mixing::MixingModel,
    ) -> Result<Self, EstimatorError> {
        validate_propensities(data, e_hat)?;
        let inv_n = 1.0 / data.n() as f64;
        let (mut pr_coas, mut pr_treated, mut num_y0, mut num_y1) = (0.0, 0.0, 0.0, 0.0);
        for (row, &e) in data.rows().iter().zip(e_hat) {
            if !row.survived() {
                continue;
            }
            let sw = signed_weight(row.instrument(), e);
            let y = row.observed_outcome();
            if row.treatment() {
                pr_treated += sw;
                num_y1 += y * model.weight(y) * sw;
            } else {
                pr_coas -= sw;
                num_y0 -= y * sw;
            }
        }
        Ok(Self {
            pr_coas_hat: pr_coas * inv_n,
            pr_co_survive_treated_hat: pr_treated * inv_n,
            numerator_y0: num_y0 * inv_n,
            numerator_y1: num_y1 * inv_n,
        })
    }
}

/// The mixing-intercept moment profile
/// `h(alpha) = (1/N) sum S (w(Y)D + 1 - D) [Z/e - (1-Z)/(1-e)]`
/// with `w(y) = expit(alpha + beta y)`.
pub fn h_alpha(
    data: &Dataset,
    e_hat: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<f64, EstimatorError> {
    validate_propensities(data, e_hat)?;
    let mut sum = 0.0;
    for (row, &e) in data.rows().iter().zip(e_hat) {
        if !row.survived() {
            continue;
        }
        let sw = signed_weight(row.instrument(), e);
        if row.treatment() {
            sum += expit(alpha + beta * row.observed_outcome()) * sw;
        } else {
            sum += sw;
        }
    }
    Ok(sum / data.n() as f64)
}

/// Precomputed profile of `h` as a function of the mixing intercept.
///
/// Treated survivors are grouped by distinct outcome value so that each
/// evaluation costs one `expit` per group (two groups for binary outcomes)
/// instead of one per row.
pub(crate) struct HProfile {
    /// (beta * y, summed signed weight / N) per distinct outcome.
    groups: Vec<(f64, f64)>,
    /// Untreated-survivor moment with g = 1.
    pub b_hat: f64,
    /// Treated-survivor moment with g = 1 (diagnostic; the no-root failure
    /// is exactly b_hat exceeding the reachable range of this mass).
    #[allow(dead_code)]
    pub a_hat: f64,
}

impl HProfile {
    pub fn new(data: &Dataset, e_hat: &[f64], beta: f64) -> Result<Self, EstimatorError> {
        validate_propensities(data, e_hat)?;
        let inv_n = 1.0 / data.n() as f64;
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        let mut b_hat = 0.0;
        for (row, &e) in data.rows().iter().zip(e_hat) {
            if !row.survived() {
                continue;
            }
            let sw = signed_weight(row.instrument(), e);
            if row.treatment() {
                pairs.push((row.observed_outcome(), sw * inv_n));
            } else {
                b_hat -= sw * inv_n;
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("outcomes are finite"));
        let mut groups: Vec<(f64, f64)> = Vec::new();
        for (y, c) in pairs {
            match groups.last_mut() {
                Some((gy, gc)) if *gy == beta * y => *gc += c,
                _ => groups.push((beta * y, c)),
            }
        }
        let a_hat = groups.iter().map(|&(_, c)| c).sum();
        Ok(Self {
            groups,
            b_hat,
            a_hat,
        })
    }

    /// `h(alpha)` for this dataset, propensity vector, and slope.
    pub fn eval(&self, alpha: f64) -> f64 {
        let mut sum = -self.b_hat;
        for &(by, c) in &self.groups {
            sum += expit(alpha + by) * c;
        }
        sum
    }

    /// Derivative of `h` in the intercept.
    pub fn eval_derivative(&self, alpha: f64) -> f64 {
        let mut sum = 0.0;
        for &(by, c) in &self.groups {
            let w = expit(alpha + by);
            sum += w * (1.0 - w) * c;
        }
        sum
    }
}
