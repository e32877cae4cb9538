use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn driftcrb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftcrb"))
        .args(args)
        .output()
        .unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(name)
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: TempDir::new().unwrap(),
        }
    }

    fn config(&self, name: &str, json: &str) -> String {
        let path = self.dir.path().join(name);
        std::fs::write(&path, json).unwrap();
        path.to_str().unwrap().to_string()
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_string()
    }
}

fn run_ok(args: &[&str]) -> Vec<u8> {
    let out = driftcrb(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn json(args: &[&str]) -> Value {
    serde_json::from_slice(&run_ok(args)).unwrap()
}

/// Data rows of a CSV output, header row first.
fn csv_rows(bytes: &[u8]) -> Vec<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .from_reader(bytes);
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn approx(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

fn check_golden(name: &str, actual: &[u8]) {
    let path = fixture("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap();
    assert!(
        expected == actual,
        "output differs from {}:\n{}",
        path.display(),
        String::from_utf8_lossy(actual)
    );
}

#[test]
fn golden_crb_white_noise() {
    let config = fixture("configs/crb_awgn.json");
    let out = run_ok(&["crb", "--config", config.to_str().unwrap()]);
    check_golden("crb_awgn.json", &out);
}

#[test]
fn golden_mre_map() {
    let config = fixture("configs/mre_map_small.json");
    let out = run_ok(&["mre-map", "--config", config.to_str().unwrap()]);
    check_golden("mre_map_small.csv", &out);
}

#[test]
fn white_noise_exact_equals_closed() {
    let v = json(&[
        "crb",
        "--config",
        fixture("configs/crb_awgn.json").to_str().unwrap(),
    ]);
    let entry = &v["result"][0];
    assert!(approx(entry["exact"][0].as_f64().unwrap(), 0.01, 1e-12));
    for a in entry["approximations"].as_array().unwrap() {
        assert!(approx(a["diag"][0].as_f64().unwrap(), 0.01, 1e-12));
    }
    assert_eq!(v["meta"]["seed"], 0);
    assert_eq!(v["meta"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn closed_form_accurate_at_range_endpoint() {
    let ws = Workspace::new();
    let config = ws.config(
        "c.json",
        r#"{"signal": {"P": 1}, "sensors": [{"sigma2": 72, "gamma": 0.6, "rho": 0.85}], "tau": "inf", "N": 400}"#,
    );
    let v = json(&["crb", "--config", &config]);
    let second = &v["result"][0]["approximations"][0];
    assert_eq!(second["mode"], "closed-second");
    assert!(second["mre"].as_f64().unwrap() < 0.05);
}

#[test]
fn exit_codes() {
    let ws = Workspace::new();
    let infinite = ws.config(
        "inf.json",
        r#"{"signal": {"P": 1}, "sensors": [{"sigma2": 1, "gamma": 0.1, "rho": 1}], "tau": "inf", "N": 50}"#,
    );
    assert_eq!(
        driftcrb(&["crb", "--config", &infinite]).status.code(),
        Some(3)
    );

    let unknown = ws.config("unknown.json", r#"{"signal": {"P": 0}, "colour": "red"}"#);
    let out = driftcrb(&["crb", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let missing = ws.path("does-not-exist.json");
    assert_eq!(
        driftcrb(&["crb", "--config", &missing]).status.code(),
        Some(2)
    );

    let few = ws.config(
        "few.json",
        r#"{"signal": {"P": 0}, "sensors": [{"sigma2": 1, "gamma": 0, "rho": 0}], "N": 10, "trials": 1}"#,
    );
    assert_eq!(
        driftcrb(&["montecarlo", "--config", &few]).status.code(),
        Some(2)
    );

    let negative = ws.config(
        "neg.json",
        r#"{"signal": {"P": 0}, "sensors": [{"sigma2": -1, "gamma": 0, "rho": 0}], "N": 10}"#,
    );
    assert_eq!(
        driftcrb(&["crb", "--config", &negative]).status.code(),
        Some(2)
    );
}

#[test]
fn strict_turns_warnings_into_failures() {
    let ws = Workspace::new();
    let config = ws.config(
        "short.json",
        r#"{"signal": {"P": 2}, "sensors": [{"sigma2": 1, "gamma": 1, "rho": 0.97}], "tau": 1, "N": 20}"#,
    );
    let lenient = driftcrb(&["crb", "--config", &config]);
    assert_eq!(lenient.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&lenient.stderr).contains("warning"));
    let out = ws.path("strict.json");
    let strict = driftcrb(&["crb", "--config", &config, "--strict", "--out", &out]);
    assert_eq!(strict.status.code(), Some(4));
    // The result file is still written.
    assert!(std::fs::metadata(&out).unwrap().len() > 0);
}

#[test]
fn montecarlo_is_deterministic_and_covers_truth() {
    let ws = Workspace::new();
    let config = ws.config(
        "mc.json",
        r#"{"signal": {"beta": [3.0]}, "sensors": [{"sigma2": 1, "gamma": 0, "rho": 0}], "N": 100, "trials": 2000, "seed": 5}"#,
    );
    let (a, b, c) = (ws.path("a.json"), ws.path("b.json"), ws.path("c.json"));
    run_ok(&["montecarlo", "--config", &config, "--out", &a]);
    run_ok(&["montecarlo", "--config", &config, "--out", &b]);
    run_ok(&[
        "montecarlo",
        "--config",
        &config,
        "--out",
        &c,
        "--seed",
        "6",
    ]);
    let (a, b, c) = (
        std::fs::read(a).unwrap(),
        std::fs::read(b).unwrap(),
        std::fs::read(c).unwrap(),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);

    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["meta"]["seed"], 5);
    let mc = &v["result"]["monte_carlo"];
    let (lo, hi) = (
        mc["ci_low"][0].as_f64().unwrap(),
        mc["ci_high"][0].as_f64().unwrap(),
    );
    assert!(lo <= 0.01 && 0.01 <= hi, "[{lo}, {hi}]");
    assert!(approx(v["result"]["crb"][0].as_f64().unwrap(), 0.01, 1e-12));
}

#[test]
fn mre_map_columns_and_failures() {
    let out = run_ok(&[
        "mre-map",
        "--config",
        fixture("configs/mre_map_small.json").to_str().unwrap(),
    ]);
    let rows = csv_rows(&out);
    assert_eq!(
        rows[0],
        [
            "rho",
            "gamma",
            "tau_mode",
            "variant",
            "N_epsilon",
            "mre",
            "reason"
        ]
    );
    // 3 rho x 2 gamma x 2 tau x 2 variants
    assert_eq!(rows.len(), 1 + 24);
    let header = String::from_utf8(out).unwrap();
    assert!(header.starts_with("# command: mre-map\n"));
    // Uncalibrated random walk has no finite bound.
    let infinite = rows
        .iter()
        .skip(1)
        .find(|r| {
            r[0].parse::<f64>().unwrap() == 1.0
                && r[2] == "inf"
                && r[1].parse::<f64>().unwrap() > 0.0
        })
        .unwrap();
    assert_eq!(infinite[4], "NaN");
    assert!(!infinite[6].is_empty());
}

#[test]
fn white_noise_cell_is_accurate_immediately() {
    let ws = Workspace::new();
    let config = ws.config(
        "g0.json",
        r#"{"signal": {"P": 0}, "grid": {"rho": [0.5], "gamma": [0.0]}, "tau": "inf"}"#,
    );
    let rows = csv_rows(&run_ok(&["mre-map", "--config", &config]));
    for row in &rows[1..] {
        assert_eq!(row[4], "2");
    }
}

#[test]
fn quantized_bound_ignores_signal() {
    let ws = Workspace::new();
    let body = |beta: &str, u0: f64, u1: f64| {
        format!(
            r#"{{"signal": {{"beta": {beta}}}, "box": {{"rho": [0.85, 0.95], "sigma2": [72, 288], "gamma": [0.6, 2.4], "M": 3}},
                "tau": 1, "N": 60, "quantizer": {{"U0": {u0}, "U1": {u1}, "bits": [5, 7]}}, "trials": 200}}"#
        )
    };
    let shifted = ws.config("a.json", &body("[400, 0.9]", 0.0, 1200.0));
    let centred = ws.config("b.json", &body("[0, 0]", -600.0, 600.0));
    let a = csv_rows(&run_ok(&["quantized", "--config", &shifted]));
    let b = csv_rows(&run_ok(&["quantized", "--config", &centred]));
    assert_eq!(
        a[0],
        [
            "tau_mode",
            "bits",
            "p",
            "modified_crb",
            "modified_crb_closed",
            "mc_variance",
            "ci_low",
            "ci_high",
            "clip_rate"
        ]
    );
    // bits 5, 7 and the full-precision reference, two coefficients each.
    assert_eq!(a.len(), 1 + 6);
    assert_eq!(a[5][1], "inf");
    for (x, y) in a.iter().zip(&b).skip(1) {
        assert_eq!(x[3], y[3]);
    }
    let crb = |row: &Vec<String>| row[3].parse::<f64>().unwrap();
    assert!(crb(&a[1]) > crb(&a[3]) && crb(&a[3]) > crb(&a[5]));
}

#[test]
fn multisensor_rows() {
    let ws = Workspace::new();
    let config = ws.config(
        "ms.json",
        r#"{"signal": {"P": 1}, "box": {"rho": [0.85, 0.95], "sigma2": [72, 288], "gamma": [0.6, 2.4], "M": [2, 4]},
            "N_list": [30], "draws": 4, "trials": 40, "seed": 3}"#,
    );
    let rows = csv_rows(&run_ok(&["multisensor", "--config", &config]));
    assert_eq!(rows[0][..5], ["tau_mode", "N", "M", "p", "avg_crb"]);
    // Both calibration extremes by default, two M values, two coefficients.
    assert_eq!(rows.len(), 1 + 8);
    assert!(rows[1..].iter().any(|r| r[0] == "1") && rows[1..].iter().any(|r| r[0] == "inf"));
}

#[test]
fn seed_flag_overrides_config() {
    let ws = Workspace::new();
    let config = ws.config(
        "s.json",
        r#"{"signal": {"P": 0}, "sensors": [{"sigma2": 1, "gamma": 0, "rho": 0}], "N": 10, "seed": 1}"#,
    );
    let v = json(&["crb", "--config", &config, "--seed", "42"]);
    assert_eq!(v["meta"]["seed"], 42);
}
