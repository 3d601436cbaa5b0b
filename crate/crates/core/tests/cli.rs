use std::path::Path;
use std::process::{Command, Output};

use pascal_boundary::io::schema;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pascal-boundary"));
    c.env_remove(pascal_boundary::cli::OUT_DIR_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn validate(schema_name: &str, doc: &Value) {
    let schema: Value = serde_json::from_str(schema(schema_name).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn dims_csv_has_one_row_per_cell() {
    let o = run(&["dims", "--family", "stirling1", "--max-level", "10", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 67);
    assert!(text.contains("\n0,10,3628800\n"));
}

#[test]
fn qpascal_dims_are_exact() {
    let o = run(&["dims", "--family", "qpascal", "--q", "1/2", "--max-level", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate("dims", &doc);
    let cell = doc["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["h"] == 2 && c["t"] == 2)
        .unwrap();
    // [4 choose 2]_{1/2} = (1-q^3)(1-q^4)/((1-q)(1-q^2))
    assert_eq!(cell["value"], "35/16");
}

#[test]
fn nonpositive_weight_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "n,value\n0,1\n1,0\n2,3\n");
    let o = run(&["dims", "--family", "custom", "--w0-file", &bad, "--max-level", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NonPositiveWeight"));
}

#[test]
fn missing_file_exits_1() {
    let o = run(&["dims", "--family", "custom", "--w0-file", "/nonexistent/w0.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn phi_reports_exact_residuals() {
    let o = run(&["phi", "--family", "polya", "--a", "1", "--b", "1", "--max-level", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("recursion residual 0 ; level-sum error 0"));
    let text = stdout(&o);
    assert!(text.starts_with("h,t,phi\n"));
    assert!(text.contains("\n4,4,1/630\n"));
}

#[test]
fn phi_space_time_walk_json() {
    let o = run(&[
        "phi", "--family", "gstirling", "--a", "linear:1,1", "--b", "const:0", "--theta", "2",
        "--max-level", "4", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate("phi", &doc);
    assert_eq!(doc["family"], "g_stirling");
    assert_eq!(doc["values"][2]["value"], "2/3");
}

#[test]
fn crp_integrality_exits_2() {
    let o = run(&["phi", "--family", "crp", "--alpha", "-1", "--theta", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["phi", "--family", "crp", "--alpha", "-1", "--theta", "3"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn exact_flag_rejects_decimals() {
    let o = run(&["dims", "--family", "qpascal", "--q", "0.5", "--exact"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["dims", "--family", "qpascal", "--q", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn martin_limit_from_the_command_line() {
    let o = run(&[
        "phi", "--family", "qpascal", "--q", "1/2", "--limit-path", "tails:1", "--max-level", "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // φ(1,0) of the extreme with at most one tail is q^{m-t}·... = 1/2
    assert!(stdout(&o).contains("\n1,0,"));
    let o = run(&[
        "phi", "--family", "pascal", "--limit-path", "balanced", "--max-level", "3", "--budget", "20",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn boundary_reports() {
    let o = run(&["boundary", "--family", "gstirling1", "--a", "power:1"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate("boundary_report", &doc);
    assert_eq!(doc["classification"], "continuous");

    let o = run(&["boundary", "--family", "qpascal", "--q", "1/2", "--max-extremes", "5"]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate("boundary_report", &doc);
    assert_eq!(doc["classification"], "discrete");
    let pis: Vec<&str> = doc["extremes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["pi"].as_str().unwrap())
        .collect();
    for pi in ["0", "1", "1/2", "1/4", "1/8"] {
        assert!(pis.contains(&pi), "{pis:?}");
    }
    assert_eq!(doc["accumulation_points"], serde_json::json!(["0"]));

    let dir = tempfile::tempdir().unwrap();
    let seq = write(dir.path(), "seq.csv", "n,value\n0,1\n1,1/2\n2,3\n3,2\n");
    let o = run(&["boundary", "--family", "gstirling1", "--a-file", &seq]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate("boundary_report", &doc);
    assert_eq!(doc["classification"], "inconclusive");
    assert!(!doc["evidence"]["partial_sums"].as_array().unwrap().is_empty());
}

#[test]
fn z_law_csv() {
    let o = run(&["boundary", "--family", "gstirling1", "--a", "geom:1,2", "--theta", "1", "--z"]);
    assert_eq!(o.status.code(), Some(0));
    let (min_z, weights, bound) = pascal_boundary::io::read_z_csv(o.stdout.as_slice()).unwrap();
    assert!(bound < 1e-9);
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(min_z <= 0);
    let o = run(&["boundary", "--family", "gstirling1", "--a", "power:1", "--theta", "1", "--z"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_job_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let job = write(
        dir.path(),
        "job.json",
        r#"{"process":"crp","params":{"alpha":"1/2","theta":"1"},"n":40,"replicates":2000,"seed":7,"statistics":["endpoint","scaled","blocks"]}"#,
    );
    let job_doc: Value = serde_json::from_str(&std::fs::read_to_string(&job).unwrap()).unwrap();
    validate("simulation_job", &job_doc);
    let a = run(&["simulate", "--job", &job]);
    let b = run(&["simulate", "--job", &job]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    validate("simulation_result", &doc);
    assert!(doc["blocks"]["mean_blocks"].as_f64().unwrap() > 1.0);
}

#[test]
fn simulate_flags_friedman() {
    let o = run(&[
        "simulate", "--process", "friedman", "--a", "1", "--b", "1", "--n", "10000", "--reps", "1000",
        "--seed", "42",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    validate("simulation_result", &doc);
    let mean = doc["scaled"]["mean"].as_f64().unwrap();
    assert!((mean - 0.5).abs() < 0.02);
}

#[test]
fn simulate_csv_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env(pascal_boundary::cli::OUT_DIR_ENV, dir.path())
        .args([
            "simulate", "--process", "polya", "--a", "2", "--b", "3", "--n", "50", "--reps", "500",
            "--stat", "endpoint", "--format", "csv",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    assert!(text.starts_with("h,t,count,frequency\n"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn moment_check_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    // μ = 1/2 δ_1 + 1/4 δ_{1/2} + 1/4 δ_{1/4}: seq(n) = Σ μ_m q^{mn}
    let rows: Vec<String> = (0..8)
        .map(|n| {
            let v = pascal_boundary::Scalar::ratio(1, 2)
                + pascal_boundary::Scalar::ratio(1, 4) * pascal_boundary::Scalar::ratio(1, 2).powi(n)
                + pascal_boundary::Scalar::ratio(1, 4) * pascal_boundary::Scalar::ratio(1, 4).powi(n);
            format!("{n},{v}")
        })
        .collect();
    let seq = write(dir.path(), "seq.csv", &format!("n,value\n{}\n", rows.join("\n")));
    let o = run(&["moment-check", "--q", "0.5", "--phi-file", &seq, "--atoms", "--m-max", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let atoms: Vec<f64> = doc["atoms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap().parse().unwrap())
        .collect();
    for (got, want) in atoms.iter().zip([0.5, 0.25, 0.25, 0.0, 0.0]) {
        assert!((got - want).abs() < 1e-10, "{atoms:?}");
    }

    let o = run(&["moment-check", "--q", "1/2", "--phi-file", &seq]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["outcome"], "array");

    let bad = write(dir.path(), "bad.csv", "n,value\n0,1\n1,1/2\n2,1/2\n3,1/4\n");
    let o = run(&["moment-check", "--family", "pascal", "--phi-file", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["outcome"], "witness");
}

#[test]
fn self_check_passes() {
    let o = run(&["self-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["dims", "--max-level", "x"]).status.code(), Some(2));
    assert_eq!(run(&["dims"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
