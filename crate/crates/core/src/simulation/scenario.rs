//! Scenario configuration for the synthetic designs.
//!
//! A scenario fixes the composite-class proportions, the true mixing
//! parameters, the baseline outcome probabilities, and the instrument
//! propensity truth. Treated survivor outcome probabilities are derived
//! from the mixing model so that the marginal mixing identity holds by
//! construction.

use serde::{Deserialize, Serialize};

use crate::error::SimulationError;
use crate::mixing::expit;

/// Composite compliance-by-survival class.
///
/// Compliance: complier (takes treatment iff encouraged), always-taker,
/// never-taker. Survival: always-survived, protected (survives only when
/// treated), never-survived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompositeClass {
    CoAs,
    CoPr,
    CoNs,
    AtAs,
    AtPr,
    AtNs,
    NtAs,
    NtPr,
    NtNs,
}

impl CompositeClass {
    pub const ALL: [CompositeClass; 9] = [
        CompositeClass::CoAs,
        CompositeClass::CoPr,
        CompositeClass::CoNs,
        CompositeClass::AtAs,
        CompositeClass::AtPr,
        CompositeClass::AtNs,
        CompositeClass::NtAs,
        CompositeClass::NtPr,
        CompositeClass::NtNs,
    ];

    /// Treatment taken when the instrument is `z`.
    pub fn treatment(&self, z: bool) -> bool {
        match self {
            CompositeClass::CoAs | CompositeClass::CoPr | CompositeClass::CoNs => z,
            CompositeClass::AtAs | CompositeClass::AtPr | CompositeClass::AtNs => true,
            CompositeClass::NtAs | CompositeClass::NtPr | CompositeClass::NtNs => false,
        }
    }

    /// Survival under treatment status `d`.
    pub fn survival(&self, d: bool) -> bool {
        match self {
            CompositeClass::CoAs | CompositeClass::AtAs | CompositeClass::NtAs => true,
            CompositeClass::CoPr | CompositeClass::AtPr | CompositeClass::NtPr => d,
            CompositeClass::CoNs | CompositeClass::AtNs | CompositeClass::NtNs => false,
        }
    }
}

/// Proportions of the nine composite classes, in [`CompositeClass::ALL`]
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumProportions([f64; 9]);

impl StratumProportions {
    pub fn new(q: [f64; 9]) -> Result<Self, SimulationError> {
        if q.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SimulationError::InvalidConfig(
                "class proportions must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SimulationError::InvalidConfig(format!(
                "class proportions must sum to 1 (got {total})"
            )));
        }
        if q[0] <= 0.0 {
            return Err(SimulationError::InvalidConfig(
                "the complier always-survivor proportion must be positive".into(),
            ));
        }
        Ok(Self(q))
    }

    pub fn get(&self, class: CompositeClass) -> f64 {
        self.0[CompositeClass::ALL
            .iter()
            .position(|c| *c == class)
            .expect("class in table")]
    }

    pub fn as_slice(&self) -> &[f64; 9] {
        &self.0
    }
}

/// Full synthetic-design configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    /// Sample size; the fixed covariate design needs a multiple of 16.
    pub n: usize,
    pub q: StratumProportions,
    pub alpha_true: f64,
    pub beta_true: f64,
    /// Outcome probability for unencouraged complier always-survivors.
    pub p_coas_0: f64,
    /// Outcome probability for survivors outside the complier
    /// always-survivor / protected classes.
    pub p_other: f64,
    /// Marginal outcome probability of treated complier survivors;
    /// required exactly when the true slope is zero (it is unconstrained
    /// there), derived otherwise.
    pub p_co_as_or_pr: Option<f64>,
    /// Instrument propensity truth, intercept first.
    pub propensity_gamma: Vec<f64>,
}

/// Outcome probabilities implied by the mixing model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedProbs {
    /// Marginal outcome probability of treated complier survivors.
    pub p_co_as_or_pr: f64,
    /// Outcome probability of treated complier always-survivors.
    pub p_coas_1: f64,
    /// Outcome probability of treated complier protected survivors.
    pub p_copr_1: f64,
}

impl DerivedProbs {
    /// True survivor LATE of the configuration.
    pub fn true_late(&self, cfg: &ScenarioConfig) -> f64 {
        self.p_coas_1 - cfg.p_coas_0
    }
}

fn check_prob(name: &str, value: f64) -> Result<(), SimulationError> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(SimulationError::InfeasibleScenario(format!(
            "derived probability {name} = {value} is outside [0, 1]"
        )));
    }
    Ok(())
}

/// Derive the treated survivor outcome probabilities from the mixing
/// parameters and class proportions.
pub fn derive_outcome_probs(cfg: &ScenarioConfig) -> Result<DerivedProbs, SimulationError> {
    let q_as = cfg.q.get(CompositeClass::CoAs);
    let q_pr = cfg.q.get(CompositeClass::CoPr);
    let w0 = expit(cfg.alpha_true);
    let w1 = expit(cfg.alpha_true + cfg.beta_true);
    let share_as = q_as / (q_as + q_pr);

    let p_or = if cfg.beta_true == 0.0 {
        cfg.p_co_as_or_pr
            .ok_or(SimulationError::MissingDegenerateProb)?
    } else {
        if w1 == w0 {
            return Err(SimulationError::InfeasibleScenario(format!(
                "mixing weight saturates: expit({}) equals expit({}) at double precision",
                cfg.alpha_true,
                cfg.alpha_true + cfg.beta_true
            )));
        }
        (share_as - w0) / (w1 - w0)
    };
    check_prob("p_co_as_or_pr", p_or)?;

    let p_coas_1 = p_or * w1 / share_as;
    check_prob("p_coas_1", p_coas_1)?;
    let p_copr_1 = if q_pr == 0.0 {
        // No protected compliers exist; their outcome law is vacuous.
        0.0
    } else {
        p_or * (1.0 - w1) * (q_as + q_pr) / q_pr
    };
    check_prob("p_copr_1", p_copr_1)?;

    Ok(DerivedProbs {
        p_co_as_or_pr: p_or,
        p_coas_1,
        p_copr_1,
    })
}

impl ScenarioConfig {
    /// Validate structural fields (proportions are validated on
    /// construction of [`StratumProportions`]).
    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.n == 0 || !self.n.is_multiple_of(16) {
            return Err(SimulationError::InvalidConfig(format!(
                "sample size must be a positive multiple of 16 for the balanced covariate design (got {})",
                self.n
            )));
        }
        if self.propensity_gamma.len() != 5 {
            return Err(SimulationError::InvalidConfig(format!(
                "propensity truth must have 5 coefficients (intercept plus four covariates), got {}",
                self.propensity_gamma.len()
            )));
        }
        for (name, v) in [("p_coas_0", self.p_coas_0), ("p_other", self.p_other)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimulationError::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if let Some(p) = self.p_co_as_or_pr {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimulationError::InvalidConfig(format!(
                    "p_co_as_or_pr must lie in [0, 1], got {p}"
                )));
            }
        }
        derive_outcome_probs(self).map(|_| ())
    }

    /// Built-in design s1: flat mixing weight, equal complier survivor
    /// classes, true effect 0.2.
    pub fn s1() -> Self {
        Self {
            id: "s1".into(),
            n: 2000,
            q: StratumProportions::new([0.3, 0.3, 0.05, 0.1, 0.05, 0.05, 0.05, 0.05, 0.05])
                .expect("valid proportions"),
            alpha_true: 0.0,
            beta_true: 0.0,
            p_coas_0: 0.3,
            p_other: 0.3,
            p_co_as_or_pr: Some(0.5),
            propensity_gamma: vec![0.5, 0.2, -0.2, 0.0, 0.0],
        }
    }

    /// Built-in design s2: steep mixing slope, true effect 0.489.
    pub fn s2() -> Self {
        Self {
            id: "s2".into(),
            n: 2000,
            q: StratumProportions::new([0.4, 0.1, 0.05, 0.2, 0.05, 0.05, 0.05, 0.05, 0.05])
                .expect("valid proportions"),
            alpha_true: 0.0,
            beta_true: 3.0,
            p_coas_0: 0.3,
            p_other: 0.3,
            p_co_as_or_pr: None,
            propensity_gamma: vec![0.5, 0.2, -0.2, 0.0, 0.0],
        }
    }

    /// Built-in design s3: rare protected compliers, true effect 0.558;
    /// the sequential intercept solve fails on a sizable share of samples.
    pub fn s3() -> Self {
        Self {
            id: "s3".into(),
            n: 2000,
            q: StratumProportions::new([0.4, 0.01, 0.05, 0.29, 0.05, 0.05, 0.05, 0.05, 0.05])
                .expect("valid proportions"),
            alpha_true: 2.0,
            beta_true: 3.0,
            p_coas_0: 0.3,
            p_other: 0.3,
            p_co_as_or_pr: None,
            propensity_gamma: vec![0.5, 0.2, -0.2, 0.0, 0.0],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "s1" => Some(Self::s1()),
            "s2" => Some(Self::s2()),
            "s3" => Some(Self::s3()),
            _ => None,
        }
    }

    /// Parse the flat `key = value` scenario document format.
    ///
    /// Keys: `id`, `n`, `alpha`, `beta`, `p_coas_0`, `p_other`,
    /// `p_co_as_or_pr` (optional), `propensity_gamma` (comma separated,
    /// intercept first), and the nine class proportions
    /// `q_co_as, q_co_pr, q_co_ns, q_at_as, q_at_pr, q_at_ns, q_nt_as,
    /// q_nt_pr, q_nt_ns`. Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self, SimulationError> {
        let mut fields = std::collections::HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(SimulationError::InvalidConfig(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            fields.insert(key.trim().to_string(), value.trim().to_string());
        }

        fn take(
            fields: &mut std::collections::HashMap<String, String>,
            key: &str,
        ) -> Result<String, SimulationError> {
            fields.remove(key).ok_or_else(|| {
                SimulationError::InvalidConfig(format!("missing required key `{key}`"))
            })
        }
        let parse_f64 = |key: &str, value: &str| {
            value.parse::<f64>().map_err(|_| {
                SimulationError::InvalidConfig(format!("key `{key}`: invalid number `{value}`"))
            })
        };

        let id = fields.remove("id").unwrap_or_else(|| "custom".to_string());
        let n_text = take(&mut fields, "n")?;
        let n = n_text.parse::<usize>().map_err(|_| {
            SimulationError::InvalidConfig(format!("key `n`: invalid count `{n_text}`"))
        })?;
        let alpha_true = parse_f64("alpha", &take(&mut fields, "alpha")?)?;
        let beta_true = parse_f64("beta", &take(&mut fields, "beta")?)?;
        let p_coas_0 = parse_f64("p_coas_0", &take(&mut fields, "p_coas_0")?)?;
        let p_other = parse_f64("p_other", &take(&mut fields, "p_other")?)?;
        let p_co_as_or_pr = match fields.remove("p_co_as_or_pr") {
            Some(v) => Some(parse_f64("p_co_as_or_pr", &v)?),
            None => None,
        };

        let mut q = [0.0; 9];
        let names = [
            "q_co_as", "q_co_pr", "q_co_ns", "q_at_as", "q_at_pr", "q_at_ns", "q_nt_as", "q_nt_pr",
            "q_nt_ns",
        ];
        for (slot, name) in q.iter_mut().zip(names) {
            *slot = parse_f64(name, &take(&mut fields, name)?)?;
        }

        let gamma_text = take(&mut fields, "propensity_gamma")?;
        let propensity_gamma = gamma_text
            .split(',')
            .map(|v| parse_f64("propensity_gamma", v.trim()))
            .collect::<Result<Vec<f64>, _>>()?;

        if let Some(unknown) = fields.keys().next() {
            return Err(SimulationError::InvalidConfig(format!(
                "unknown key `{unknown}`"
            )));
        }

        let cfg = ScenarioConfig {
            id,
            n,
            q: StratumProportions::new(q)?,
            alpha_true,
            beta_true,
            p_coas_0,
            p_other,
            p_co_as_or_pr,
            propensity_gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
