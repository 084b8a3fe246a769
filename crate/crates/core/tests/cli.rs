use std::path::Path;
use std::process::{Command, Output};

use pkattract::io::load_cloud;
use pkattract::trap::in_trap;
use pkattract::{Params, C64};
use sha2::{Digest, Sha256};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pkattract")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn out_of_range_lambda_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["green", "--lambda-re", "0.3"], dir.path())), 2);
    assert_eq!(code(&run(&["green", "--lambda-re", "0.0"], dir.path())), 2);
    assert_eq!(code(&run(&["attractor", "--lambda-re", "0.01", "--rho", "0.5"], dir.path())), 2);
    assert_eq!(code(&run(&["no-such-command"], dir.path())), 2);
    assert_eq!(code(&run(&["iterate", "--start", "1,0"], dir.path())), 2);
}

#[test]
fn green_reports_the_functional_equation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["green", "--lambda-re", "0.01", "--point", "1,0,0.5,0.5,0.01,0"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["functional_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn verify_passes_at_the_default_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--k", "2", "--lambda-re", "0.01", "--seed", "7", "--out", "v.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    assert!(reports.len() >= 4);
    assert!(reports.iter().all(|r| r["passed"] == true));
}

#[test]
fn precision_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pkattract"))
        .args(["verify", "--trials", "5"])
        .env("PKATTRACT_PRECISION", "quad")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_pkattract"))
        .args(["verify", "--trials", "5"])
        .env("PKATTRACT_PRECISION", "extended")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["precision_bits"], 106);
}

#[test]
fn attractor_cloud_manifest_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["attractor", "--k", "2", "--lambda-re", "0.01", "--samples", "5000", "--seed", "7"];
    let one = [&base[..], &["--workers", "1", "--out", "a.csv"]].concat();
    let four = [&base[..], &["--workers", "4", "--out", "b.csv"]].concat();
    assert_eq!(code(&run(&one, dir.path())), 0);
    assert_eq!(code(&run(&four, dir.path())), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());

    let cloud = load_cloud(&dir.path().join("a.csv")).unwrap();
    assert_eq!(cloud.len(), 5000);
    let params = Params::with_default_rho(2, C64::new(0.01, 0.0)).unwrap();
    assert!(cloud.points().iter().all(|p| in_trap(&params, p).0));

    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "attractor");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["worker_count"], 1);
    assert_eq!(m["artifacts"][0]["sha256"], hex::encode(Sha256::digest(&a)));
}

#[test]
fn render_conserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["attractor", "--samples", "3000", "--seed", "3", "--out", "c.csv"];
    assert_eq!(code(&run(&args, dir.path())), 0);
    let args = ["render", "--input", "c.csv", "--out", "m.pgm", "--width", "40", "--height", "20"];
    let o = run(&args, dir.path());
    assert_eq!(code(&o), 0);
    let pgm = std::fs::read_to_string(dir.path().join("m.pgm")).unwrap();
    let mut tokens = pgm.split_whitespace();
    assert_eq!(tokens.next(), Some("P2"));
    assert_eq!(tokens.clone().count(), 3 + 40 * 20);
    let counts = std::fs::read_to_string(dir.path().join("m.pgm.counts.csv")).unwrap();
    let inside: u64 = counts.split([',', '\n']).filter(|s| !s.is_empty()).map(|s| s.parse::<u64>().unwrap()).sum();
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.pgm.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["sizes"]["inside"].as_u64().unwrap(), inside);
    assert_eq!(inside + m["sizes"]["outside"].as_u64().unwrap(), 3000);
    assert!(inside > 1000);
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 2);
}

#[test]
fn periodic_and_preimage_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["periodic", "--n", "5", "--out", "p.csv"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(load_cloud(&dir.path().join("p.csv")).unwrap().len(), 33);
    let o = run(&["preimages", "--k", "3", "--seed", "2"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 8);
}

#[test]
fn analysis_commands_emit_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["lyapunov", "--orbits", "8", "--length", "500", "--map", "base"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["exponents"][0].as_f64().unwrap() - 0.5 * 2f64.ln()).abs() < 0.05);
    let o = run(&["entropy", "--method", "periodic", "--n", "10"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["estimate"].as_f64().unwrap() - 2f64.ln()).abs() < 0.01);
    let o = run(&["mixing", "--samples", "20000", "--n", "3"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["correlations"].as_array().unwrap().len(), 4);
    assert!(v["separation_fraction"].as_f64().unwrap() > 0.99);
}
