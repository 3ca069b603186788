//! End-to-end tests of the command line surface: schemas, exit-status
//! policy, manifests, and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latesens"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("latesens-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

/// Intercept-only dataset on which every slope is solvable.
const SOLVABLE_CSV: &str = "\
z,d,s,y
1,1,1,1
1,1,1,0
1,1,1,1
1,1,1,0
1,1,1,1
1,1,1,0
1,1,1,1
1,1,1,0
1,1,0,
1,1,0,
0,0,1,1
0,0,1,0
0,0,1,0
0,0,1,0
0,0,1,0
0,0,1,0
0,0,0,
0,0,0,
0,0,0,
0,0,0,
";

/// Treated-survivor mass below untreated-survivor mass: the intercept
/// equation has no root at any slope.
const NO_ROOT_CSV: &str = "\
z,d,s,y
1,1,1,1
1,1,0,
1,1,0,
1,1,0,
0,0,1,0
0,0,1,0
0,0,1,0
0,0,0,
";

#[test]
fn estimate_ok_record() {
    let dir = temp_dir("estimate-ok");
    let input = dir.join("data.csv");
    write(&input, SOLVABLE_CSV);

    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--beta",
        "0",
        "--method",
        "glm3",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["estimate"]["status"], "ok");
    assert_eq!(doc["estimate"]["method"], "glm3");
    assert!(doc["estimate"]["late_hat"].is_number());
    assert!(doc["estimate"]["alpha_hat"].is_number());
    assert!(doc["estimate"]["diagnostics"]["h_at_alpha"].is_number());
    // Manifest goes to stderr when writing to stdout.
    let mani: serde_json::Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert_eq!(mani["command"], "estimate");
    assert!(mani["input_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn estimate_censored_outcome_is_parse_error_with_row() {
    let dir = temp_dir("estimate-parse");
    let input = dir.join("bad.csv");
    write(&input, "z,d,s,y\n1,1,1,1\n0,0,0,0.5\n");

    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--beta",
        "0",
        "--method",
        "glm3",
    ]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert_eq!(err["error"]["code"], "parse_error");
    let message = err["error"]["message"].as_str().unwrap();
    assert!(message.contains("line 3"), "{message}");
}

#[test]
fn estimate_no_root_is_successful_run_with_status() {
    let dir = temp_dir("estimate-noroot");
    let input = dir.join("noroot.csv");
    write(&input, NO_ROOT_CSV);

    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--beta",
        "1.5",
        "--method",
        "cbps3",
    ]);
    assert!(
        out.status.success(),
        "analysis failure must not be a crash: {}",
        stderr(&out)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["estimate"]["status"], "no_root_for_alpha");
    assert!(doc["estimate"]["late_hat"].is_null());
}

#[test]
fn estimate_with_bootstrap_interval() {
    let dir = temp_dir("estimate-ci");
    let input = dir.join("data.csv");
    write(&input, SOLVABLE_CSV);

    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--beta",
        "0",
        "--method",
        "glm3",
        "--bootstrap",
        "80",
        "--level",
        "0.9",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let ci = &doc["ci"];
    assert_eq!(ci["level"], 0.9);
    assert!(ci["lower"].as_f64().unwrap() <= ci["upper"].as_f64().unwrap());
}

#[test]
fn sweep_grid_shape_and_consistency_with_estimate() {
    let dir = temp_dir("sweep");
    let input = dir.join("data.csv");
    write(&input, SOLVABLE_CSV);
    let out_path = dir.join("sweep.csv");

    let out = run(&[
        "sweep",
        "--input",
        input.to_str().unwrap(),
        "--beta-min",
        "-10",
        "--beta-max",
        "5",
        "--beta-steps",
        "31",
        "--method",
        "glm3",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "beta,late_hat,ci_lower,ci_upper,status");
    assert_eq!(lines.len(), 32, "header plus one row per grid point");
    assert!(lines[1].starts_with("-10,"));
    assert!(lines[31].starts_with("5,"));
    assert!(std::fs::metadata(dir.join("sweep.csv.manifest.json")).is_ok());

    // Single-point grid agrees with the estimate command.
    let single = run(&[
        "sweep",
        "--input",
        input.to_str().unwrap(),
        "--beta-min",
        "0",
        "--beta-max",
        "0",
        "--beta-steps",
        "1",
        "--method",
        "glm3",
    ]);
    assert!(single.status.success());
    let sweep_row = stdout(&single);
    let est = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--beta",
        "0",
        "--method",
        "glm3",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&est)).unwrap();
    let late = doc["estimate"]["late_hat"].as_f64().unwrap();
    let row = sweep_row.lines().nth(1).unwrap();
    let row_late: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(late, row_late, "sweep row {row}");
}

#[test]
fn sweep_records_failed_rows_with_empty_numerics() {
    let dir = temp_dir("sweep-fail");
    let input = dir.join("noroot.csv");
    write(&input, NO_ROOT_CSV);

    let out = run(&[
        "sweep",
        "--input",
        input.to_str().unwrap(),
        "--beta-min",
        "-1",
        "--beta-max",
        "1",
        "--beta-steps",
        "3",
        "--method",
        "glm3",
    ]);
    assert!(out.status.success(), "sweeps must not abort mid-grid");
    for row in stdout(&out).lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1], "", "late empty on failure: {row}");
        assert_eq!(fields[4], "no_root_for_alpha");
    }
}

#[test]
fn simulate_writes_balanced_dataset_and_truth_manifest() {
    let dir = temp_dir("simulate");
    let out_path = dir.join("s1.csv");
    let out = run(&[
        "simulate",
        "--scenario",
        "s1",
        "--seed",
        "7",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,x3,x4,z,d,s,y");
    assert_eq!(lines.len(), 2001, "2000 rows per scenario preset");
    // 125 rows per covariate cell.
    let first_cell = lines[1..]
        .iter()
        .filter(|l| l.starts_with("0,0,0,0,"))
        .count();
    assert_eq!(first_cell, 125);

    let mani: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("s1.csv.manifest.json")).unwrap())
            .unwrap();
    assert!((mani["derived"]["true_late"].as_f64().unwrap() - 0.2).abs() < 1e-12);

    // s2 reports its derived truth.
    let out2_path = dir.join("s2.csv");
    run(&[
        "simulate",
        "--scenario",
        "s2",
        "--seed",
        "7",
        "--output",
        out2_path.to_str().unwrap(),
    ]);
    let mani2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("s2.csv.manifest.json")).unwrap())
            .unwrap();
    assert!((mani2["derived"]["true_late"].as_f64().unwrap() - 0.489).abs() < 1e-3);
    assert!((mani2["derived"]["p_coas_1"].as_f64().unwrap() - 0.789).abs() < 1e-3);
}

#[test]
fn simulate_is_byte_identical_and_reingestable() {
    let dir = temp_dir("simulate-repro");
    let a_path = dir.join("a.csv");
    let b_path = dir.join("b.csv");
    run(&[
        "simulate",
        "--scenario",
        "s2",
        "--seed",
        "11",
        "--output",
        a_path.to_str().unwrap(),
    ]);
    run(&[
        "simulate",
        "--scenario",
        "s2",
        "--seed",
        "11",
        "--output",
        b_path.to_str().unwrap(),
    ]);
    let a = std::fs::read(&a_path).unwrap();
    let b = std::fs::read(&b_path).unwrap();
    assert_eq!(a, b, "same invocation twice must be byte-identical");

    // Round trip into the estimator: missingness must survive.
    let text = String::from_utf8(a).unwrap();
    let censored = text.lines().skip(1).filter(|l| l.ends_with(',')).count();
    assert!(censored > 0, "scenario produces censored rows");
    let out = run(&[
        "estimate",
        "--input",
        a_path.to_str().unwrap(),
        "--beta",
        "3",
        "--method",
        "glm3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["estimate"]["status"], "ok");
    let late = doc["estimate"]["late_hat"].as_f64().unwrap();
    assert!(
        (late - 0.489).abs() < 0.15,
        "estimate {late} near the design truth"
    );
}

#[test]
fn scenario_file_accepted() {
    let dir = temp_dir("scenario-file");
    let scenario_path = dir.join("custom.scenario");
    write(
        &scenario_path,
        "id = tiny\nn = 320\nalpha = 0.0\nbeta = 3.0\np_coas_0 = 0.3\np_other = 0.3\n\
         q_co_as = 0.4\nq_co_pr = 0.1\nq_co_ns = 0.05\nq_at_as = 0.2\nq_at_pr = 0.05\n\
         q_at_ns = 0.05\nq_nt_as = 0.05\nq_nt_pr = 0.05\nq_nt_ns = 0.05\n\
         propensity_gamma = 0.5, 0.2, -0.2, 0.0, 0.0\n",
    );
    let out_path = dir.join("tiny.csv");
    let out = run(&[
        "simulate",
        "--scenario",
        scenario_path.to_str().unwrap(),
        "--seed",
        "3",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read_to_string(&out_path).unwrap().lines().count(),
        321
    );
    let mani: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("tiny.csv.manifest.json")).unwrap())
            .unwrap();
    assert!(mani["input_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn replicate_smoke_table() {
    let out = run(&[
        "replicate",
        "--scenario",
        "s1",
        "--beta",
        "0",
        "--beta",
        "1",
        "--method",
        "glm3",
        "--replications",
        "2",
        "--seed",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "scenario,assumed_beta,method,mean_late,sd_late,fail_rate,replicates"
    );
    assert_eq!(lines.len(), 3);
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "s1");
        assert_eq!(fields[2], "glm3");
        assert_eq!(fields[6], "2");
    }
}

#[test]
fn outputs_reproducible_from_manifest_parameters() {
    let dir = temp_dir("manifest-repro");
    let input = dir.join("data.csv");
    write(&input, SOLVABLE_CSV);
    let out1 = dir.join("one.json");
    let out2 = dir.join("two.json");

    let args = |out: &Path| {
        vec![
            "estimate".to_string(),
            "--input".into(),
            input.display().to_string(),
            "--beta".into(),
            "0.5".into(),
            "--method".into(),
            "cbps3".into(),
            "--bootstrap".into(),
            "60".into(),
            "--seed".into(),
            "9".into(),
            "--output".into(),
            out.display().to_string(),
        ]
    };
    let first = bin().args(args(&out1)).output().unwrap();
    assert!(first.status.success(), "{}", stderr(&first));

    // Re-run with the parameters recorded in the manifest.
    let mani: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("one.json.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(mani["parameters"]["beta"].as_f64().unwrap(), 0.5);
    assert_eq!(mani["parameters"]["method"], "cbps3");
    assert_eq!(mani["seed"].as_u64().unwrap(), 9);
    let second = bin().args(args(&out2)).output().unwrap();
    assert!(second.status.success());

    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "identical parameters must regenerate identical bytes");
}

#[test]
fn unknown_method_is_config_failure() {
    let dir = temp_dir("bad-method");
    let input = dir.join("data.csv");
    write(&input, SOLVABLE_CSV);
    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--beta",
        "0",
        "--method",
        "ols",
    ]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert_eq!(err["error"]["code"], "invalid_method");
}
