use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CONFIG: &str = r#"{
  "f": {"kind": "linear", "lambda": 1.0},
  "g": {"kind": "proliferation_linear", "mu": 1.0, "sigma_tilde": 0.6},
  "sigma_bar": 1.0, "beta": 1.0, "nu": 1.0, "sigma_D": 0.5
}"#;

struct Env {
    dir: TempDir,
}

impl Env {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("p.json"), CONFIG).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_fbtumor"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    fn ok_json(&self, args: &[&str]) -> Value {
        let out = self.run(args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    }
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    for r in &rows {
        assert_eq!(r.len(), header.len(), "row {r:?} does not match header {header:?}");
    }
    (header, rows)
}

#[test]
fn thresholds_json_schema() {
    let env = Env::new();
    let v = env.ok_json(&["thresholds", "--config", "p.json"]);
    let obj = v.as_object().unwrap();
    let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 3);
    for k in ["sigma_tilde", "sigma_star", "R_c_at_sigma_star"] {
        assert!(obj[k].is_f64(), "{k}");
    }
    assert_eq!(obj["sigma_tilde"].as_f64().unwrap(), 0.6);
    assert!(obj["sigma_star"].as_f64().unwrap() > 0.6);
}

#[test]
fn stationary_and_critical_radius() {
    let env = Env::new();
    let v = env.ok_json(&["stationary", "--config", "p.json"]);
    assert_eq!(v["exists"], true);
    assert_eq!(v["classification"], "NecroticDormant");
    assert!(v["rho"].as_f64().unwrap() > 0.0);
    let none = env.ok_json(&["stationary", "--config", "p.json", "--sigma-bar", "0.55"]);
    assert_eq!(none["exists"], false);
    assert!(none["R_s"].is_null());
    assert_eq!(none["classification"], "NoDormant");

    let rc = env.ok_json(&["critical-radius", "--config", "p.json"]);
    assert!((rc["R_c"].as_f64().unwrap() - 1.4653288).abs() < 1e-6);
}

#[test]
fn flags_override_config() {
    let env = Env::new();
    let base = env.ok_json(&["critical-radius", "--config", "p.json"]);
    let more = env.ok_json(&["critical-radius", "--config", "p.json", "--sigma-bar", "2"]);
    assert!(more["R_c"].as_f64() > base["R_c"].as_f64());
    let flags_only = env.ok_json(&[
        "critical-radius", "--lambda", "1", "--mu", "1", "--sigma-tilde", "0.6", "--sigma-bar", "1",
        "--beta", "1", "--nu", "1", "--sigma-d", "0.5",
    ]);
    assert_eq!(flags_only, base);
}

#[test]
fn evolve_writes_csv_and_sidecar() {
    let env = Env::new();
    let out = env.run(&[
        "evolve", "--config", "p.json", "--sigma-bar", "0.8", "--R0", "3.0", "--t-end", "50",
        "--out", "traj.csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv(&env.path("traj.csv"));
    assert_eq!(header, ["t", "R", "phase"]);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 3.0);
    assert!(rows.iter().all(|r| r[2] == "necrotic" || r[2] == "nonnecrotic"));

    let side: Value = serde_json::from_str(&fs::read_to_string(env.path("traj.json")).unwrap()).unwrap();
    assert_eq!(side["R0"], 3.0);
    assert_eq!(side["t_end"], 50.0);
    assert!(side["R_s"].is_f64());
    let transitions = side["transitions"].as_array().unwrap();
    assert_eq!(transitions.len(), 1);
    assert_eq!(transitions[0]["direction"], "NecroticToNonnecrotic");
    assert!(transitions[0]["T"].as_f64().unwrap() > 0.0);
    assert!(["ConvergesTo", "MaxTimeReached"].contains(&side["verdict"].as_str().unwrap()));
}

#[test]
fn fate_reports_transition() {
    let env = Env::new();
    let v = env.ok_json(&["fate", "--config", "p.json", "--sigma-bar", "1.5", "--R0", "0.5"]);
    assert_eq!(v["verdict"], "ConvergesTo");
    assert_eq!(v["direction"], "NonnecroticToNecrotic");
    assert!(v["T_transition"].as_f64().unwrap() > 0.0);
    let starved = env.ok_json(&["fate", "--config", "p.json", "--sigma-bar", "0.55", "--R0", "1"]);
    assert_eq!(starved["verdict"], "Vanishes");
    // R_c is below 1 this close to sigma_D, so the core dissolves on the way down
    assert_eq!(starved["direction"], "NecroticToNonnecrotic");
    let small = env.ok_json(&["fate", "--config", "p.json", "--sigma-bar", "0.55", "--R0", "0.01"]);
    assert_eq!(small["verdict"], "Vanishes");
    assert!(small["T_transition"].is_null());
}

#[test]
fn profile_outputs() {
    let env = Env::new();
    let out = env.run(&["profile", "--config", "p.json", "--R", "2", "--eta", "0.3", "--out", "u.csv"]);
    assert!(out.status.success());
    let (header, rows) = csv(&env.path("u.csv"));
    assert_eq!(header, ["s", "u", "u_prime"]);
    assert_eq!(rows.len(), 1025);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.3);
    let side: Value = serde_json::from_str(&fs::read_to_string(env.path("u.json")).unwrap()).unwrap();
    assert_eq!(side["R"], 2.0);
    assert_eq!(side["eta"], 0.3);

    let out = env.run(&["profile", "--config", "p.json", "--R", "2", "--physical", "--out", "sig.csv"]);
    assert!(out.status.success());
    let (header, rows) = csv(&env.path("sig.csv"));
    assert_eq!(header, ["r", "sigma"]);
    assert_eq!(rows.len(), 1025);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.5);
    assert_eq!(rows[1024][0].parse::<f64>().unwrap(), 2.0);
}

#[test]
fn sweep_rows_are_ordered_and_deterministic() {
    let env = Env::new();
    let args = [
        "sweep", "--config", "p.json", "--axis", "sigma_bar", "--from", "0.61", "--to", "3.0",
        "--count", "100", "--command", "stationary",
    ];
    let first = env.run(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    fs::write(env.path("sweep.csv"), &text).unwrap();
    let (header, rows) = csv(&env.path("sweep.csv"));
    assert_eq!(header, ["sigma_bar", "exists", "R_s", "classification"]);
    assert_eq!(rows.len(), 100);
    let xs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(xs[0], 0.61);
    assert_eq!(xs[99], 3.0);
    assert!(rows.iter().all(|r| r[1] == "true"));
    assert_eq!(rows[0][3], "NonnecroticDormant");
    assert_eq!(rows[99][3], "NecroticDormant");

    let again = Command::new(env!("CARGO_BIN_EXE_fbtumor"))
        .current_dir(env.dir.path())
        .env("FBTUMOR_THREADS", "3")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(again.stdout, first.stdout);
}

#[test]
fn sweep_over_initial_radius() {
    let env = Env::new();
    let out = env.run(&[
        "sweep", "--config", "p.json", "--axis", "R0", "--from", "0.5", "--to", "3", "--count", "3",
        "--command", "fate", "--out", "f.csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv(&env.path("f.csv"));
    assert_eq!(header, ["R0", "verdict", "R_final", "T_transition", "direction"]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1] == "ConvergesTo"));
}

#[test]
fn exit_codes() {
    let env = Env::new();
    fs::write(env.path("bad.json"), "{not json").unwrap();
    let code = |args: &[&str]| env.run(args).status.code().unwrap();

    assert_eq!(code(&["stationary", "--config", "bad.json"]), 2);
    assert_eq!(code(&["stationary", "--config", "missing.json"]), 2);
    assert_eq!(code(&["stationary", "--sigma-bar", "1"]), 2);
    assert_eq!(code(&["sweep", "--config", "p.json", "--axis", "beta", "--from", "2", "--to", "1",
        "--count", "3", "--command", "stationary"]), 2);
    assert_eq!(code(&["profile", "--config", "p.json", "--R=-1"]), 2);

    assert_eq!(code(&["stationary", "--config", "p.json", "--sigma-d", "0.7"]), 4);
    let out = env.run(&["validate", "--config", "p.json", "--sigma-d", "0.7"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma_D"));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["valid"], false);

    let out = env.run(&["evolve", "--config", "p.json", "--R0", "2", "--t-end", "50",
        "--max-steps", "3", "--out", "partial.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    let (_, rows) = csv(&env.path("partial.csv"));
    assert!(!rows.is_empty());
}
