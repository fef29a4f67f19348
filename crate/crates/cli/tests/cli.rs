use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cadherin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cadherin"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn key<'a>(text: &'a str, k: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(k).and_then(|r| r.strip_prefix('=')))
}

fn manifest(dir: &Path) -> String {
    fs::read_to_string(dir.join("manifest.txt")).expect("manifest written")
}

fn assert_manifest_outputs_exist(dir: &Path) {
    let m = manifest(dir);
    let count: usize = key(&m, "outputs.count").unwrap().parse().unwrap();
    assert!(count > 0);
    for i in 0..count {
        let rel = key(&m, &format!("output.{i}.path")).unwrap();
        assert!(dir.join(rel).is_file(), "missing {rel}");
    }
}

#[test]
fn stationary_prints_admissible_root() {
    let dir = tempfile::tempdir().unwrap();
    let o = cadherin(&["stationary"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let v: f64 = key(&text, "admissible").unwrap().parse().unwrap();
    assert!((v - 0.31074354839).abs() < 1e-10);
    assert_manifest_outputs_exist(dir.path());

    let o = cadherin(&["stationary", "--eps", "0"], dir.path());
    assert!(o.status.success());
    let v: f64 = key(&stdout(&o), "admissible").unwrap().parse().unwrap();
    assert!((v - 0.7).abs() < 1e-14);
}

#[test]
fn eps_sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = cadherin(&["stationary", "--eps-sweep", "0:0.3:4"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("series/eps_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert_manifest_outputs_exist(dir.path());
}

#[test]
fn parameter_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // a1 rho <= a0 breaks the gregarious condition
    let o = cadherin(
        &["stationary", "--a0", "0.4", "--a1", "0.5", "--rho", "0.7"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    let o = cadherin(&["stationary", "--strict", "--rho", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = cadherin(&["stationary", "--strict", "--lenient"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

/// RK4 for the spatially constant system.
fn ode(u0: f64, v0: f64, t_end: f64) -> f64 {
    let (rho, a0, a1, eps) = (0.7, 0.25, 0.5, 0.35);
    let q = |u: f64, v: f64| (rho - v) * (a0 + a1 * v) * u - eps * v;
    let n = 20_000;
    let h = t_end / n as f64;
    let (mut u, mut v) = (u0, v0);
    for _ in 0..n {
        let k1 = q(u, v);
        let k2 = q(u - 0.5 * h * k1, v + 0.5 * h * k1);
        let k3 = q(u - 0.5 * h * k2, v + 0.5 * h * k2);
        let k4 = q(u - h * k3, v + h * k3);
        let d = h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        u -= d;
        v += d;
    }
    v
}

fn last_row(csv: &str) -> Vec<f64> {
    csv.lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect()
}

#[test]
fn constant_evolve_matches_ode_and_reruns_identically() {
    let args = [
        "evolve",
        "--grid",
        "8",
        "--init",
        "constant:0.6,0.4",
        "--dt",
        "1e-4",
        "--T",
        "1",
        "--snapshot-every",
        "5000",
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(cadherin(&args, a.path()).status.success());
    assert!(cadherin(&args, b.path()).status.success());
    let diag = fs::read_to_string(a.path().join("series/diagnostics.csv")).unwrap();
    assert!(diag.starts_with("t,mass,u_min,u_max,v_min,v_max,v_m\n"));
    let row = last_row(&diag);
    assert_eq!(row[0], 1.0);
    assert!((row[6] - ode(0.6, 0.4, 1.0)).abs() < 1e-5);
    assert!((row[1] - 1.0).abs() < 1e-10);
    assert_manifest_outputs_exist(a.path());

    let m = manifest(a.path());
    let count: usize = key(&m, "outputs.count").unwrap().parse().unwrap();
    for i in 0..count {
        let rel = key(&m, &format!("output.{i}.path")).unwrap();
        assert_eq!(
            fs::read(a.path().join(rel)).unwrap(),
            fs::read(b.path().join(rel)).unwrap(),
            "{rel} differs between runs"
        );
    }
}

#[test]
fn stationary_initial_data_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    let o = cadherin(
        &[
            "evolve",
            "--grid",
            "8",
            "--init",
            "stationary",
            "--dt",
            "1e-2",
            "--T",
            "0.5",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let diag = fs::read_to_string(dir.path().join("series/diagnostics.csv")).unwrap();
    let v1 = 0.310_743_548_393_768_5;
    for line in diag.lines().skip(1) {
        let row: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((row[4] - v1).abs() < 1e-12 && (row[5] - v1).abs() < 1e-12);
    }
}

#[test]
fn stop_threshold_writes_convergence_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = cadherin(
        &[
            "evolve",
            "--grid",
            "8",
            "--init",
            "constant:0.6,0.4",
            "--dt",
            "1e-2",
            "--T",
            "40",
            "--stop-threshold",
            "1e-3",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(dir.path().join("series/convergence.csv").is_file());
    let m = manifest(dir.path());
    assert!(key(&m, "stop_reason")
        .unwrap()
        .starts_with("threshold-reached"));
    assert_manifest_outputs_exist(dir.path());
}

#[test]
fn picard_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let o = cadherin(
        &[
            "picard",
            "--grid",
            "8",
            "--init",
            "stationary",
            "--dt",
            "1e-2",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(key(&text, "iterations"), Some("1"));
    assert_eq!(key(&text, "converged"), Some("true"));
    assert_manifest_outputs_exist(dir.path());

    let dir = tempfile::tempdir().unwrap();
    let o = cadherin(&["picard", "--grid", "8", "--dt", "1e-2"], dir.path());
    assert!(o.status.success());
    let summary = fs::read_to_string(dir.path().join("certificates/summary.csv")).unwrap();
    assert!(summary.starts_with("n,sup_U,sup_V,sup_bound,pass\n"));
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",true")));
    let it0 = fs::read_to_string(dir.path().join("certificates/iteration_000.csv")).unwrap();
    assert!(it0.starts_with("t,U_n,V_n,bound_n\n"));
}

#[test]
fn picard_rejects_bound_data_above_mu() {
    let dir = tempfile::tempdir().unwrap();
    let o = cadherin(
        &[
            "picard",
            "--grid",
            "8",
            "--init",
            "constant:0.3,0.6",
            "--dt",
            "1e-2",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(5));
    assert!(dir.path().join("manifest.txt").is_file());
}

#[test]
fn verify_passes_and_catches_a_leaky_laplacian() {
    let dir = tempfile::tempdir().unwrap();
    let o = cadherin(&["verify", "--quick"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(dir.path().join("series/verify.csv").is_file());

    let o = cadherin(&["verify", "--quick", "--perturb-laplacian"], dir.path());
    assert_eq!(o.status.code(), Some(7));
    assert!(stdout(&o).contains("check=laplacian_conservative status=fail"));
}

#[test]
fn config_file_sits_between_preset_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "preset = paper-fig2\neps = 0.2\nrho = 0.6\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("out");
    let o = cadherin(&["stationary", "--config", cfg, "--rho", "0.65"], &out);
    assert!(o.status.success());
    let m = manifest(&out);
    assert_eq!(key(&m, "config.eps"), Some("0.2"));
    assert_eq!(key(&m, "config.eps.source"), Some("config"));
    assert_eq!(key(&m, "config.rho"), Some("0.65"));
    assert_eq!(key(&m, "config.rho.source"), Some("flag"));
    assert_eq!(key(&m, "config.grid"), Some("128x128"));
    assert_eq!(key(&m, "config.grid.source"), Some("preset"));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "unknown_key = 1\n").unwrap();
    let o = cadherin(&["stationary", "--config", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn snapshots_load_back_as_initial_data() {
    let a = tempfile::tempdir().unwrap();
    let args = ["evolve", "--grid", "6x4", "--dt", "1e-2", "--T", "0.1"];
    assert!(cadherin(&args, a.path()).status.success());
    let u = a.path().join("fields/u_0001.csv");
    let v = a.path().join("fields/v_0001.csv");
    let init = format!("files:{},{}", u.display(), v.display());
    let b = tempfile::tempdir().unwrap();
    let o = cadherin(
        &[
            "evolve", "--grid", "6x4", "--dt", "1e-2", "--T", "1e-2", "--init", &init,
        ],
        b.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let back = fs::read_to_string(b.path().join("fields/u_0000.csv")).unwrap();
    let orig = fs::read_to_string(&u).unwrap();
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&back), body(&orig));

    let o = cadherin(&["evolve", "--grid", "8", "--init", &init], b.path());
    assert_eq!(o.status.code(), Some(1));
}
