use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fracsys");

fn schema() -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let raw: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&raw).unwrap()
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, body).unwrap();
    p
}

fn params(s: f64, p: f64, mu1: f64, mu2: f64, beta: f64) -> String {
    format!("[params]\ns = {s}\np = {p}\nN = 1\nmu1 = {mu1}\nmu2 = {mu2}\nbeta = {beta}\n")
}

const SMALL_GRID: &str = "[grid]\nn = 1024\nL = 32\n";

fn run(mode: &str, cfg: &Path, out: &Path, extra: &[&str]) -> (i32, Value) {
    let status = Command::new(BIN)
        .arg(mode)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    let code = status.status.code().unwrap();
    let report = fs::read_to_string(out.join("report.json"))
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or(Value::Null);
    (code, report)
}

fn assert_valid(report: &Value) {
    let schema = schema();
    let msgs: Vec<String> = match schema.validate(report) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    panic!("schema violations: {msgs:?}");
}

#[test]
fn analyze_half_laplacian_is_nondegenerate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &params(0.5, 1.5, 2.0, 1.0, 1.0));
    let (code, r) = run("analyze", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_valid(&r);
    assert_eq!(r["nondegeneracy"]["verdict"], "nondegenerate");
    assert_eq!(r["nondegeneracy"]["kernel_dim"], 1);
    assert_eq!(r["vector_solution"]["positive"], true);
    let rho = r["ground_state"]["residual_norm"].as_f64().unwrap();
    assert!(r["vector_solution"]["residual_u"].as_f64().unwrap() <= 5.0 * rho);
}

#[test]
fn analyze_in_nonexistence_window_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &params(1.0, 2.0, 2.0, 1.0, 1.5));
    let (code, r) = run("analyze", &cfg, dir.path(), &[]);
    assert_eq!(code, 2);
    assert_valid(&r);
    assert_eq!(r["status"], "error");
    assert_eq!(r["conditions"]["nonexistence_window"], true);
    assert!(r["nonexistence"].as_str().unwrap().contains("[1, 2]"));
}

#[test]
fn landscape_csv_has_single_interior_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let body =
        format!("{}[landscape]\ntau_max = 20\npoints = 2000\n", params(1.0, 2.0, 2.0, 1.0, 3.0));
    let cfg = config(dir.path(), &body);
    let (code, r) = run("landscape", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_valid(&r);
    let text = fs::read_to_string(dir.path().join("landscape.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "tau,f,g,h");
    let rows: Vec<Vec<f64>> =
        lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    let f: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let minima: Vec<usize> =
        (1..f.len() - 1).filter(|&i| f[i] < f[i - 1] && f[i] < f[i + 1]).collect();
    assert_eq!(minima.len(), 1);
    assert!((rows[minima[0]][0] - 0.5f64.sqrt()).abs() < 0.01);
    assert!((f.last().unwrap() - 1.0).abs() < 0.01);
    assert_eq!(r["landscape"]["case_label"], "max_at_zero_unique_min");
}

#[test]
fn ground_state_writes_profile_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{}{SMALL_GRID}", params(1.0, 2.0, 2.0, 1.0, 3.0));
    let cfg = config(dir.path(), &body);
    let (code, r) = run("ground-state", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_valid(&r);
    assert!((r["ground_state"]["w0"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-8);
    let csv = fs::read_to_string(dir.path().join("w_profile.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1025);
    let bin = fs::read(dir.path().join("w.bin")).unwrap();
    assert_eq!(bin.len(), 32 + 8 * 1024);
    assert_eq!(u64::from_le_bytes(bin[8..16].try_into().unwrap()), 1024);
}

#[test]
fn rayleigh_matches_prediction_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("seed = 11\n{}{SMALL_GRID}", params(1.0, 2.0, 2.0, 1.0, 3.0));
    let cfg = config(dir.path(), &body);
    let out1 = dir.path().join("one");
    let out2 = dir.path().join("two");
    let (code, r1) = run("rayleigh", &cfg, &out1, &["--restarts", "3"]);
    assert_eq!(code, 0);
    assert_valid(&r1);
    let (_, r2) = run("rayleigh", &cfg, &out2, &["--restarts", "3"]);
    assert_eq!(r1, r2);
    assert!(r1["rayleigh"]["relative_error"].as_f64().unwrap().abs() < 1e-2);
    assert_eq!(r1["rayleigh"]["candidates"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_writes_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{}{SMALL_GRID}[sweep]\nvariable = beta\nlo = 2.5\nhi = 4\ncount = 4\n",
        params(1.0, 2.0, 2.0, 1.0, 3.0)
    );
    let cfg = config(dir.path(), &body);
    let (code, r) = run("sweep", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_valid(&r);
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,tau0,k1,f_tilde,verdict,s_mu");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.contains("nondegenerate")));
    // 17 significant digits
    assert_eq!(lines[1].split(',').next().unwrap(), "2.5000000000000000e0");
}

#[test]
fn nondegen_mode_emits_report() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{}{SMALL_GRID}", params(1.0, 2.0, 2.0, 1.0, 3.0));
    let cfg = config(dir.path(), &body);
    let (code, r) = run("nondegen", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_valid(&r);
    let co = &r["nondegeneracy"]["coeffs"];
    assert!((co["f_tilde"].as_f64().unwrap() - 3.0 / 7.0).abs() < 1e-12);
}

#[test]
fn config_errors_exit_1_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{}[grid]\nn = 1000\n", params(1.0, 2.0, 2.0, 1.0, 3.0));
    let cfg = config(dir.path(), &body);
    let out = Command::new(BIN).args(["analyze", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 9"));
}

#[test]
fn non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body =
        format!("{}{SMALL_GRID}[tolerances]\ngs_max_iter = 3\n", params(1.0, 2.0, 2.0, 1.0, 3.0));
    let cfg = config(dir.path(), &body);
    let (code, r) = run("ground-state", &cfg, dir.path(), &["--gs-tol", "1e-12"]);
    assert_valid(&r);
    assert_eq!(code, 3);
    assert_eq!(r["error"]["kind"], "NonConvergence");
}
