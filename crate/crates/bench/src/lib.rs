//! Shared fixtures for the estimator benchmarks.

use latesens_core::{generate_dataset, Dataset, ScenarioConfig};

/// Scenario dataset of the standard design size.
pub fn scenario_dataset(name: &str, seed: u64) -> Dataset {
    let cfg = ScenarioConfig::preset(name).expect("known preset");
    generate_dataset(&cfg, seed).expect("preset generates")
}
