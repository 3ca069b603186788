//! The logistic mixing model that attaches a latent survivor-class
//! probability to each treated survivor outcome.

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Numerically stable logistic function.
///
/// Branches on the sign of the argument so that neither branch ever
/// exponentiates a positive number: no overflow anywhere in the finite
/// range of `f64`. Saturates to 0.0/1.0 once the true value is closer to
/// the boundary than one ulp (|x| beyond roughly 36.7).
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`expit`] for p in (0, 1).
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Two-parameter logistic mixing model `w(y) = expit(alpha + beta * y)`.
///
/// `beta` is the analyst-fixed sensitivity slope; `alpha` is the intercept,
/// either solved from the data or estimated jointly with the propensity
/// score. The weight is the probability that a treated complier-survivor
/// with outcome `y` would also have survived untreated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingModel {
    pub alpha: f64,
    pub beta: f64,
}

impl MixingModel {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, DataError> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(DataError::NonFiniteMixing { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    /// Mixing weight at outcome `y`: `expit(alpha + beta * y)`.
    ///
    /// Monotone nondecreasing in `y` when `beta >= 0`.
    pub fn weight(&self, y: f64) -> f64 {
        expit(self.alpha + self.beta * y)
    }
}

/// Free-function form of [`MixingModel::weight`].
pub fn mixing_weight(model: &MixingModel, y: f64) -> f64 {
    model.weight(y)
}
