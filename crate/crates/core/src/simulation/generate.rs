//! Synthetic dataset generation.
//!
//! The covariate matrix is the fixed balanced full-factorial design over
//! four binary covariates (n/16 rows per cell). The instrument is drawn
//! from the logistic propensity truth, the composite class from the
//! configured proportions (independently of the covariates), treatment and
//! survival follow deterministically from class and instrument, and
//! outcomes are drawn only for survivors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, ObservationRow};
use crate::error::SimulationError;
use crate::mixing::expit;
use crate::rng::seeded_rng;
use crate::simulation::scenario::{
    derive_outcome_probs, CompositeClass, DerivedProbs, ScenarioConfig,
};

fn draw_class(rng: &mut ChaCha8Rng, q: &[f64; 9]) -> CompositeClass {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (class, &p) in CompositeClass::ALL.iter().zip(q) {
        cum += p;
        if u < cum {
            return *class;
        }
    }
    // Rounding slack in the cumulative sum.
    CompositeClass::NtNs
}

fn outcome_probability(
    cfg: &ScenarioConfig,
    derived: &DerivedProbs,
    class: CompositeClass,
    z: bool,
) -> f64 {
    match (class, z) {
        (CompositeClass::CoAs, false) => cfg.p_coas_0,
        (CompositeClass::CoAs, true) => derived.p_coas_1,
        // Protected compliers survive only when encouraged (treated).
        (CompositeClass::CoPr, true) => derived.p_copr_1,
        _ => cfg.p_other,
    }
}

/// Generate a dataset together with the latent composite class of each row.
pub fn generate_dataset_with_classes(
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<(Dataset, Vec<CompositeClass>), SimulationError> {
    cfg.validate()?;
    let derived = derive_outcome_probs(cfg)?;
    let per_cell = cfg.n / 16;
    let mut rng = seeded_rng(seed);

    let mut rows = Vec::with_capacity(cfg.n);
    let mut classes = Vec::with_capacity(cfg.n);
    for cell in 0..16u32 {
        let x: Vec<f64> = (0..4).map(|bit| f64::from((cell >> bit) & 1)).collect();
        let mut eta = cfg.propensity_gamma[0];
        for (g, v) in cfg.propensity_gamma[1..].iter().zip(&x) {
            eta += g * v;
        }
        let e = expit(eta);
        for _ in 0..per_cell {
            let z = rng.random::<f64>() < e;
            let class = draw_class(&mut rng, cfg.q.as_slice());
            let d = class.treatment(z);
            let s = class.survival(d);
            let y = if s {
                let p = outcome_probability(cfg, &derived, class, z);
                Some(f64::from(rng.random::<f64>() < p))
            } else {
                None
            };
            rows.push(
                ObservationRow::new(x.clone(), z, d, s, y)
                    .expect("generated rows satisfy the censoring contract"),
            );
            classes.push(class);
        }
    }
    let dataset = Dataset::new(rows).expect("generated dataset is non-empty and rectangular");
    Ok((dataset, classes))
}

/// Generate a dataset from a scenario configuration; deterministic in
/// `(cfg, seed)`.
pub fn generate_dataset(cfg: &ScenarioConfig, seed: u64) -> Result<Dataset, SimulationError> {
    generate_dataset_with_classes(cfg, seed).map(|(data, _)| data)
}

/// True propensity of every row under the scenario's logistic truth.
pub fn true_propensities(cfg: &ScenarioConfig, data: &Dataset) -> Vec<f64> {
    data.rows()
        .iter()
        .map(|row| {
            let mut eta = cfg.propensity_gamma[0];
            for (g, v) in cfg.propensity_gamma[1..].iter().zip(row.covariates()) {
                eta += g * v;
            }
            expit(eta)
        })
        .collect()
}
