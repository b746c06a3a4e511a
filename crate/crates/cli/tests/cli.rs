use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_exact-diffusion"));
    c.env_remove("EXACT_DIFFUSION_THREADS");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

const BM: &str = r#"{
  "drift": {"family": "piecewise_constant", "a1": 0.0, "a2": 0.0},
  "x": 0.2, "T": 1.0, "n_paths": 1, "times": [0.25, 0.5, 0.75], "seed": 7,
  "output": {"csv": "bm.csv"}
}"#;

const DISCONTINUOUS: &str = r#"{
  "drift": {"family": "piecewise_constant", "a1": 0.3, "a2": 0.9},
  "x": 0.0, "T": 1.0, "n_paths": 400, "times": [0.5], "seed": 11,
  "output": {"csv": "paths.csv"}
}"#;

#[test]
fn single_brownian_path_has_monotone_local_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bm.json", BM);
    let out = run(bin().args(["sample", "--config"]).arg(&cfg));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("bm.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("path_id,t,x,l"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5, "no Poisson points for a zero drift");
    assert!(rows.iter().all(|r| r[0] == 0.0));
    assert_eq!(rows[0][1..], [0.0, 0.2, 0.0]);
    assert!(rows
        .windows(2)
        .all(|w| w[0][1] < w[1][1] && w[0][3] <= w[1][3]));
}

#[test]
fn output_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", DISCONTINUOUS);
    let csv = dir.path().join("paths.csv");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = run(bin()
            .args(["sample", "--threads", threads, "--config"])
            .arg(&cfg));
        assert!(out.status.success());
        outputs.push(std::fs::read(&csv).unwrap());
    }
    let out = run(bin()
        .env("EXACT_DIFFUSION_THREADS", "2")
        .args(["sample", "--config"])
        .arg(&cfg));
    assert!(out.status.success());
    outputs.push(std::fs::read(&csv).unwrap());
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let out = run(bin().args(["sample", "--seed", "12", "--config"]).arg(&cfg));
    assert!(out.status.success());
    assert_ne!(std::fs::read(&csv).unwrap(), outputs[0]);
}

#[test]
fn csv_goes_to_stdout_without_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &BM.replace(r#""output": {"csv": "bm.csv"}"#, r#""output": {}"#),
    );
    let out = run(bin().args(["sample", "--config"]).arg(&cfg));
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("path_id,t,x,l\n0,0.0,0.2,0.0\n"));
}

#[test]
fn config_errors_exit_with_one_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("broken.json", "{ not json"),
        ("nodrift.json", r#"{"output": {"csv": "x.csv"}}"#),
        ("badT.json", &BM.replace(r#""T": 1.0"#, r#""T": -1.0"#)),
        ("family.json", r#"{"drift": {"family": "cubic", "a": 1}}"#),
    ];
    for (name, body) in cases {
        let cfg = write(dir.path(), name, body);
        let out = run(bin().args(["sample", "--config"]).arg(&cfg));
        assert_eq!(out.status.code(), Some(1), "{name}");
    }
    let out = run(bin()
        .args(["sample", "--config"])
        .arg(dir.path().join("missing.json")));
    assert_eq!(out.status.code(), Some(1));
    let out = run(bin()
        .args(["compare", "--config"])
        .arg(write(dir.path(), "bm.json", BM)));
    assert_eq!(
        out.status.code(),
        Some(1),
        "compare without a comparison block"
    );
    let out = run(bin().args(["sample", "--bogus"]));
    assert_eq!(out.status.code(), Some(1));
    let left: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.ends_with(".json"))
        .collect();
    assert!(left.is_empty(), "{left:?}");
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &BM.replace("bm.csv", "/proc/no/such/dir/bm.csv"),
    );
    let out = run(bin().args(["sample", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(2));
}

fn compare_config(reference: &str) -> String {
    format!(
        r#"{{
  "drift": {{"family": "piecewise_sine", "theta1": 3.665191429188092, "theta2": 0.7853981633974483}},
  "x": 0.0, "T": 1.0, "n_paths": 3000, "seed": 5,
  "comparison": {{"dt": 0.01, "n": 3000, "reference": "{reference}"}},
  "output": {{"csv": "out/cmp.csv"}}
}}"#
    )
}

#[test]
fn compare_writes_kde_csv_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cmp.json", &compare_config("exact"));
    let out = run(bin().args(["compare", "--config"]).arg(&cfg));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/cmp.csv")).unwrap();
    assert!(csv.starts_with("grid,kde_exact,kde_euler\n"));
    assert_eq!(csv.lines().count(), 513);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/cmp.json")).unwrap())
            .unwrap();
    for key in [
        "ks_statistic",
        "p_value",
        "n_exact",
        "n_euler",
        "mean_rounds",
    ] {
        assert!(report[key].is_number(), "{key}");
    }
    assert!(report["timing"]["exact_total_seconds"].is_number());
    assert!(report["timing"]["euler_total_seconds"].is_number());
    let svg = std::fs::read_to_string(dir.path().join("out/cmp.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn euler_against_euler_is_a_null_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cmp.json", &compare_config("euler"));
    let out = run(bin().args(["compare", "--config"]).arg(&cfg));
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/cmp.json")).unwrap())
            .unwrap();
    assert_eq!(report["reference"], "euler");
    assert!(report["p_value"].as_f64().unwrap() > 0.001);
}

#[test]
fn validate_filter_passes_and_p1_mutation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "v.json",
        r#"{"seed": 9, "validate": {"n": 2000, "param_sets": 5}, "output": {"json": "report.json"}}"#,
    );
    let out = run(bin()
        .args(["validate", "--filter", "bridge.case_weights", "--config"])
        .arg(&cfg));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["uncovered"].as_array().unwrap().len(), 0);

    let out = run(bin()
        .args([
            "validate",
            "--filter",
            "bridge.case_weights",
            "--mutate",
            "p1",
            "--config",
        ])
        .arg(&cfg));
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let failed: Vec<&str> = report["reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["pass"] == false)
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(failed.iter().any(|n| n.ends_with(".p1")), "{failed:?}");
    assert!(!failed.iter().any(|n| n.ends_with(".p3")), "{failed:?}");

    let out = run(bin().args(["validate", "--n", "500", "--filter", "no-such-check"]));
    assert_eq!(out.status.code(), Some(1));
}
