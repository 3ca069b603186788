//! Property tests over randomized small datasets: algebraic identities
//! between evaluation routes, closed forms against the numeric solver, and
//! an independent per-pattern tabulation oracle for the plug-in estimator.

use proptest::prelude::*;

use latesens_core::{
    censored_outcome_reads, estimate_late_plugin, expit, h_alpha, logit, solve_alpha,
    weighted_complier_moment, Dataset, EstimateStatus, Method, MixingModel, MomentArm,
    ObservationRow,
};

/// Row material: instrument, treatment, survival, outcome value, pattern id.
type RowSpec = (bool, bool, bool, f64, u8);

fn row_strategy(patterns: u8) -> impl Strategy<Value = RowSpec> {
    (
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
        -2.0..2.0f64,
        0..patterns,
    )
}

/// Build a dataset over at most `patterns` distinct covariate points with a
/// per-row propensity vector read off the pattern.
fn build(rows: &[RowSpec], pattern_e: &[f64]) -> (Dataset, Vec<f64>) {
    let built: Vec<ObservationRow> = rows
        .iter()
        .map(|&(z, d, s, y, pat)| {
            let x = vec![f64::from(pat), f64::from(pat) * 0.5 - 1.0];
            ObservationRow::new(x, z, d, s, s.then_some(y)).unwrap()
        })
        .collect();
    let e: Vec<f64> = rows
        .iter()
        .map(|&(_, _, _, _, pat)| pattern_e[pat as usize])
        .collect();
    (Dataset::new(built).unwrap(), e)
}

/// Independent oracle: per-pattern tabulation of the four inverse-weighted
/// sums that make up the plug-in ratio.
fn per_pattern_oracle(rows: &[RowSpec], pattern_e: &[f64], model: &MixingModel) -> (f64, f64) {
    let n = rows.len() as f64;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (pat, &e) in pattern_e.iter().enumerate() {
        // Tabulate this pattern's cells: (z, d) among survivors.
        let mut sum_y_w = [[0.0f64; 2]; 2]; // z, d -> sum of y * (w(y) d + 1 - d)
        let mut survivors_untreated = [0.0f64; 2]; // z -> count of s=1, d=0
        for &(z, d, s, y, p) in rows {
            if p as usize != pat || !s {
                continue;
            }
            let zi = usize::from(z);
            let di = usize::from(d);
            let weight = if d { model.weight(y) } else { 1.0 };
            sum_y_w[zi][di] += y * weight;
            if !d {
                survivors_untreated[zi] += 1.0;
            }
        }
        let w1 = 1.0 / e;
        let w0 = 1.0 / (1.0 - e);
        numerator += (sum_y_w[1][1] + sum_y_w[1][0]) * w1 - (sum_y_w[0][1] + sum_y_w[0][0]) * w0;
        denominator += survivors_untreated[0] * w0 - survivors_untreated[1] * w1;
    }
    (numerator / n, denominator / n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// The single-pass profile moment equals the difference of the two
    /// arm moments, to relative 1e-12.
    #[test]
    fn h_alpha_cross_evaluation_identity(
        rows in prop::collection::vec(row_strategy(4), 8..64),
        e in prop::collection::vec(0.05..0.95f64, 4),
        alpha in -4.0..4.0f64,
        beta in -4.0..4.0f64,
    ) {
        let (data, e_hat) = build(&rows, &e);
        let h = h_alpha(&data, &e_hat, alpha, beta).unwrap();
        let treated = weighted_complier_moment(
            &data,
            &e_hat,
            |y| expit(alpha + beta * y),
            MomentArm::TreatedSurvivor,
        ).unwrap();
        let untreated = weighted_complier_moment(
            &data,
            &e_hat,
            |_| 1.0,
            MomentArm::UntreatedSurvivor,
        ).unwrap();
        let other = treated - untreated;
        let scale = h.abs().max(other.abs()).max(1e-30);
        prop_assert!(((h - other) / scale).abs() < 1e-12);
        prop_assert_eq!(censored_outcome_reads(), 0);
    }

    /// With a flat slope the intercept solve has the closed form
    /// logit(b/a); the scan-and-bisect solver must agree to 1e-8.
    /// Fixtures couple treatment to encouragement and depress untreated
    /// survival so the mass ratio lands inside the solvable range.
    #[test]
    fn flat_slope_closed_form(
        coins in prop::collection::vec((any::<bool>(), 0.0..1.0f64, 0.0..1.0f64, -2.0..2.0f64, 0..3u8), 24..64),
        e in prop::collection::vec(0.3..0.7f64, 3),
    ) {
        let rows: Vec<RowSpec> = coins
            .into_iter()
            .map(|(z, ud, us, y, pat)| {
                let d = ud < if z { 0.85 } else { 0.15 };
                let s = us < if d { 0.9 } else { 0.45 };
                (z, d, s, y, pat)
            })
            .collect();
        let (data, e_hat) = build(&rows, &e);
        let a = weighted_complier_moment(&data, &e_hat, |_| 1.0, MomentArm::TreatedSurvivor)
            .unwrap();
        let b = weighted_complier_moment(&data, &e_hat, |_| 1.0, MomentArm::UntreatedSurvivor)
            .unwrap();
        prop_assume!(a > 0.0 && b > 0.0 && b < a);
        let ratio = b / a;
        prop_assume!(ratio > 1e-6 && ratio < 1.0 - 1e-6);
        let solution = solve_alpha(&data, &e_hat, 0.0).unwrap();
        prop_assert!(
            (solution.alpha - logit(ratio)).abs() < 1e-8,
            "solver {} vs closed form {}",
            solution.alpha,
            logit(ratio)
        );
    }

    /// Plug-in estimate equals the independent per-pattern oracle to 1e-10.
    #[test]
    fn plugin_matches_per_pattern_oracle(
        rows in prop::collection::vec(row_strategy(4), 8..64),
        e in prop::collection::vec(0.05..0.95f64, 4),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let (data, e_hat) = build(&rows, &e);
        let model = MixingModel::new(alpha, beta).unwrap();
        let estimate = estimate_late_plugin(&data, &e_hat, &model, Method::Glm3).unwrap();
        let (oracle_num, oracle_den) = per_pattern_oracle(&rows, &e, &model);
        match estimate.status {
            EstimateStatus::Ok => {
                // The denominator routes must agree tightly on their own;
                // the ratio is only compared away from degeneracy, where
                // last-ulp denominator differences cannot blow it up.
                let den = estimate.pr_coas_hat.unwrap();
                let den_scale = den.abs().max(oracle_den.abs()).max(1e-3);
                prop_assert!(((den - oracle_den) / den_scale).abs() < 1e-12);
                if oracle_den.abs() > 1e-4 {
                    let got = estimate.late_hat.unwrap();
                    let want = oracle_num / oracle_den;
                    let scale = got.abs().max(want.abs()).max(1.0);
                    prop_assert!(
                        ((got - want) / scale).abs() < 1e-10,
                        "plugin {got} vs oracle {want}"
                    );
                }
            }
            EstimateStatus::DegenerateDenominator => {
                prop_assert!(oracle_den.abs() < 1e-10);
            }
            other => prop_assert!(false, "unexpected status {other:?}"),
        }
        prop_assert_eq!(censored_outcome_reads(), 0);
    }

    /// The solved intercept satisfies its root certificate whenever the
    /// solver reports success.
    #[test]
    fn root_certificate(
        rows in prop::collection::vec(row_strategy(3), 16..64),
        e in prop::collection::vec(0.1..0.9f64, 3),
        beta in -3.0..3.0f64,
    ) {
        let (data, e_hat) = build(&rows, &e);
        if let Ok(solution) = solve_alpha(&data, &e_hat, beta) {
            let h = h_alpha(&data, &e_hat, solution.alpha, beta).unwrap();
            prop_assert!(h.abs() < 1e-10, "|h| = {} at solved intercept", h.abs());
        }
    }
}
