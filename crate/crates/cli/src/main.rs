//! `latesens` — sensitivity analysis for survivor local average treatment
//! effects with instrumental variables under censoring by death.
//!
//! Subcommands: `estimate` (one slope, JSON record), `sweep` (slope grid,
//! plot-ready CSV), `simulate` (synthetic dataset CSV from a scenario),
//! `replicate` (Monte Carlo summary table CSV). Every output is
//! accompanied by a run manifest.

mod error;
mod io;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use latesens_core::{
    bootstrap_ci, derive_outcome_probs, estimate_late, generate_dataset, replicate,
    sensitivity_sweep, BootstrapSettings, ConfidenceInterval, Dataset, EstimateStatus,
    LateEstimate, Method, ScenarioConfig,
};

use error::CliError;
use manifest::{DerivedTruths, RunManifest};

#[derive(Parser)]
#[command(
    name = "latesens",
    version,
    about = "Survivor LATE sensitivity analysis with instrumental variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the LATE at one assumed mixing slope.
    Estimate(EstimateArgs),
    /// Estimate over a grid of assumed slopes.
    Sweep(SweepArgs),
    /// Generate a synthetic dataset from a scenario.
    Simulate(SimulateArgs),
    /// Monte Carlo replication summary over (slope, method) cells.
    Replicate(ReplicateArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Input dataset (CSV schema `x1,...,xp,z,d,s,y`).
    #[arg(long)]
    input: PathBuf,
    /// Assumed mixing slope.
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Estimation method: glm3, cbps3, or cbps2.
    #[arg(long)]
    method: String,
    /// Bootstrap replicates for a percentile confidence interval.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Confidence level for the bootstrap interval.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent; manifest then goes to stderr).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    beta_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta_max: f64,
    /// Number of grid points (1 evaluates beta-min only).
    #[arg(long)]
    beta_steps: usize,
    #[arg(long)]
    method: String,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario preset (s1, s2, s3) or path to a scenario file.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReplicateArgs {
    /// Scenario preset (s1, s2, s3) or path to a scenario file.
    #[arg(long)]
    scenario: String,
    /// Assumed slope; repeat the flag for a list.
    #[arg(long = "beta", allow_negative_numbers = true, required = true)]
    betas: Vec<f64>,
    /// Method; repeat the flag for several (all three when absent).
    #[arg(long = "method")]
    methods: Vec<String>,
    #[arg(long)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_method(text: &str) -> Result<Method, CliError> {
    text.parse()
        .map_err(|msg: String| CliError::new("invalid_method", msg))
}

fn load_scenario(spec: &str) -> Result<(ScenarioConfig, Option<String>), CliError> {
    if let Some(preset) = ScenarioConfig::preset(spec) {
        return Ok((preset, None));
    }
    let path = PathBuf::from(spec);
    let bytes = std::fs::read(&path).map_err(|e| {
        CliError::new(
            "invalid_scenario",
            format!("`{spec}` is not a preset (s1, s2, s3) and not a readable file: {e}"),
        )
    })?;
    let digest = manifest::sha256_hex(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::new("parse_error", "scenario file is not valid UTF-8"))?;
    let cfg = ScenarioConfig::parse(&text)?;
    Ok((cfg, Some(digest)))
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

/// JSON record for a single estimate: the estimate itself, the optional
/// interval, and a bootstrap failure label when interval construction was
/// requested but statistically impossible.
#[derive(serde::Serialize)]
struct EstimateDocument {
    estimate: LateEstimate,
    ci: Option<ConfidenceInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_error: Option<String>,
}

fn run_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let method = parse_method(&args.method)?;
    let (data, digest) = io::read_dataset(&args.input)?;
    let estimate = estimate_late(&data, args.beta, method)?;

    let (ci, ci_error) = match args.bootstrap {
        Some(b) if estimate.status == EstimateStatus::Ok => {
            let settings = BootstrapSettings {
                replicates: b,
                level: args.level,
                seed: args.seed,
            };
            match bootstrap_ci(&data, args.beta, method, &settings) {
                Ok(ci) => (Some(ci), None),
                Err(err) => (None, Some(error::estimator_code(&err).to_string())),
            }
        }
        _ => (None, None),
    };

    let document = EstimateDocument {
        estimate,
        ci,
        ci_error,
    };
    let mut primary =
        serde_json::to_string_pretty(&document).expect("document serialization cannot fail");
    primary.push('\n');

    let run_manifest = RunManifest {
        command: "estimate",
        version: env!("CARGO_PKG_VERSION"),
        seed: args.seed,
        input_digest: Some(digest),
        parameters: serde_json::json!({
            "input": args.input.display().to_string(),
            "beta": args.beta,
            "method": method.as_str(),
            "bootstrap": args.bootstrap,
            "level": args.level,
            "output": args.output.as_ref().map(|p| p.display().to_string()),
        }),
        derived: None,
    };
    manifest::emit(args.output.as_deref(), &primary, &run_manifest)
}

fn beta_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::new(
            "invalid_config",
            "beta-steps must be at least 1",
        ));
    }
    if max < min {
        return Err(CliError::new(
            "invalid_config",
            "beta-max must not be below beta-min",
        ));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let width = (max - min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| min + width * i as f64).collect())
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let method = parse_method(&args.method)?;
    let (data, digest) = io::read_dataset(&args.input)?;
    let grid = beta_grid(args.beta_min, args.beta_max, args.beta_steps)?;
    let settings = args.bootstrap.map(|b| BootstrapSettings {
        replicates: b,
        level: args.level,
        seed: args.seed,
    });

    let results = sensitivity_sweep(&data, &grid, method, settings.as_ref());
    let mut primary = String::from("beta,late_hat,ci_lower,ci_upper,status\n");
    for r in &results {
        let late = fmt_opt(r.estimate.as_ref().and_then(|e| e.late_hat));
        let (lo, hi) = match &r.ci {
            Some(ci) => (format!("{}", ci.lower), format!("{}", ci.upper)),
            None => (String::new(), String::new()),
        };
        primary.push_str(&format!(
            "{},{late},{lo},{hi},{}\n",
            r.beta,
            r.status_label()
        ));
    }

    let run_manifest = RunManifest {
        command: "sweep",
        version: env!("CARGO_PKG_VERSION"),
        seed: args.seed,
        input_digest: Some(digest),
        parameters: serde_json::json!({
            "input": args.input.display().to_string(),
            "beta_min": args.beta_min,
            "beta_max": args.beta_max,
            "beta_steps": args.beta_steps,
            "method": method.as_str(),
            "bootstrap": args.bootstrap,
            "level": args.level,
            "output": args.output.as_ref().map(|p| p.display().to_string()),
        }),
        derived: None,
    };
    manifest::emit(args.output.as_deref(), &primary, &run_manifest)
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (cfg, scenario_digest) = load_scenario(&args.scenario)?;
    let derived = derive_outcome_probs(&cfg)?;
    let data: Dataset = generate_dataset(&cfg, args.seed)?;
    let primary = io::dataset_to_csv(&data);

    let run_manifest = RunManifest {
        command: "simulate",
        version: env!("CARGO_PKG_VERSION"),
        seed: args.seed,
        input_digest: scenario_digest,
        parameters: serde_json::json!({
            "scenario": args.scenario,
            "n": cfg.n,
            "output": args.output.display().to_string(),
        }),
        derived: Some(DerivedTruths {
            p_co_as_or_pr: derived.p_co_as_or_pr,
            p_coas_1: derived.p_coas_1,
            p_copr_1: derived.p_copr_1,
            true_late: derived.true_late(&cfg),
        }),
    };
    manifest::emit(Some(&args.output), &primary, &run_manifest)
}

fn run_replicate(args: &ReplicateArgs) -> Result<(), CliError> {
    let (cfg, scenario_digest) = load_scenario(&args.scenario)?;
    let methods = if args.methods.is_empty() {
        vec![Method::Glm3, Method::Cbps3, Method::Cbps2]
    } else {
        args.methods
            .iter()
            .map(|m| parse_method(m))
            .collect::<Result<Vec<Method>, CliError>>()?
    };

    let summaries = replicate(&cfg, &args.betas, &methods, args.replications, args.seed)?;
    let mut primary =
        String::from("scenario,assumed_beta,method,mean_late,sd_late,fail_rate,replicates\n");
    for s in &summaries {
        primary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.scenario,
            s.assumed_beta,
            s.method.as_str(),
            fmt_opt(s.mean_late),
            fmt_opt(s.sd_late),
            s.fail_rate,
            s.replicates
        ));
    }

    let run_manifest = RunManifest {
        command: "replicate",
        version: env!("CARGO_PKG_VERSION"),
        seed: args.seed,
        input_digest: scenario_digest,
        parameters: serde_json::json!({
            "scenario": args.scenario,
            "betas": args.betas,
            "methods": methods.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
            "replications": args.replications,
            "output": args.output.as_ref().map(|p| p.display().to_string()),
        }),
        derived: None,
    };
    manifest::emit(args.output.as_deref(), &primary, &run_manifest)
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(args) => run_estimate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Replicate(args) => run_replicate(args),
    };
    if let Err(err) = result {
        eprintln!("{}", err.to_json());
        std::process::exit(1);
    }
}
