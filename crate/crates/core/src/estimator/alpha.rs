//! Root finding for the mixing intercept.
//!
//! The intercept solves `h(alpha) = 0`. The profile is scanned on a fixed
//! grid wide enough that the logistic weight saturates at both ends; a sign
//! change is then narrowed by bisection and polished with guarded Newton
//! steps. No sign change anywhere on the grid is the documented failure
//! mode of the sequential procedure, not a numerical bug.

use crate::data::Dataset;
use crate::error::EstimatorError;
use crate::estimator::moments::HProfile;

const BRACKET_LO: f64 = -40.0;
const BRACKET_HI: f64 = 40.0;
const GRID_POINTS: usize = 401;
const BISECTION_WIDTH: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-10;

/// Solved mixing intercept with its certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSolution {
    pub alpha: f64,
    /// `h` re-evaluated at the returned root.
    pub h_at_alpha: f64,
    /// More than one sign change was present on the scan grid; the root
    /// from the leftmost bracket is the one returned.
    pub multiple_roots: bool,
}

/// Solve `h(alpha) = 0` for the mixing intercept at a fixed slope.
pub fn solve_alpha(
    data: &Dataset,
    e_hat: &[f64],
    beta: f64,
) -> Result<AlphaSolution, EstimatorError> {
    let profile = HProfile::new(data, e_hat, beta)?;
    solve_on_profile(&profile)
}

pub(crate) fn solve_on_profile(profile: &HProfile) -> Result<AlphaSolution, EstimatorError> {
    let step = (BRACKET_HI - BRACKET_LO) / (GRID_POINTS - 1) as f64;

    let mut brackets: Vec<(f64, f64)> = Vec::new();
    let mut prev_alpha = BRACKET_LO;
    let mut prev_h = profile.eval(prev_alpha);
    let mut h_min = prev_h;
    let mut h_max = prev_h;
    if prev_h == 0.0 {
        brackets.push((prev_alpha, prev_alpha));
    }
    for k in 1..GRID_POINTS {
        let alpha = BRACKET_LO + step * k as f64;
        let h = profile.eval(alpha);
        h_min = h_min.min(h);
        h_max = h_max.max(h);
        if h == 0.0 {
            brackets.push((alpha, alpha));
        } else if prev_h != 0.0 && (prev_h < 0.0) != (h < 0.0) {
            brackets.push((prev_alpha, alpha));
        }
        prev_alpha = alpha;
        prev_h = h;
    }

    let Some(&(mut lo, mut hi)) = brackets.first() else {
        return Err(EstimatorError::NoRootForAlpha { h_min, h_max });
    };
    let multiple_roots = brackets.len() > 1;

    // Bisection on the leftmost bracket.
    let mut h_lo = profile.eval(lo);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let h_mid = profile.eval(mid);
        if h_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (h_mid < 0.0) == (h_lo < 0.0) {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }

    // Newton polish, kept inside the bisection bracket.
    let mut alpha = 0.5 * (lo + hi);
    let mut h = profile.eval(alpha);
    for _ in 0..4 {
        if h.abs() <= ROOT_TOL * 0.01 {
            break;
        }
        let dh = profile.eval_derivative(alpha);
        if dh == 0.0 || !dh.is_finite() {
            break;
        }
        let candidate = alpha - h / dh;
        if !(lo - BISECTION_WIDTH..=hi + BISECTION_WIDTH).contains(&candidate) {
            break;
        }
        let h_candidate = profile.eval(candidate);
        if h_candidate.abs() >= h.abs() {
            break;
        }
        alpha = candidate;
        h = h_candidate;
    }

    Ok(AlphaSolution {
        alpha,
        h_at_alpha: h,
        multiple_roots,
    })
}
