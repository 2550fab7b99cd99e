use std::path::Path;
use std::process::Command;

use workcf::model::{DriveProfile, GridRange};
use workcf::Execution;
use workcf_cli::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_workcf"))
}

fn small_config(json_extra: &str) -> String {
    format!(
        r#"{{
  "scenario": {{
    "nbar": 1.0,
    "tau": 10.0,
    "gamma": 0.5,
    "cutoff": 8,
    "drive": {{"kind": "tanh_ramp", "lambda_final": 0.1, "ramp_rate": 1.0}},
    "u_grid": [0.0, 0.5, 1.0]
  }}{json_extra}
}}"#
    )
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn preset_sweep_rows() {
    let cfg = RunConfig::preset_fig2c();
    let rows = run_sweep(&cfg, Execution::default()).unwrap();
    assert_eq!(rows.len(), 401);
    assert_eq!(rows[0].u, 0.0);
    assert!((rows[0].chi.re - 1.0).abs() < 1e-10 && rows[0].chi.im.abs() < 1e-10);
    for r in &rows {
        assert!((r.chi_damped - r.chi * (-0.5 * r.u).exp()).norm() < 1e-10);
        assert_eq!(r.omega_u, r.u);
    }

    let bytes = sweep_csv(&rows).unwrap();
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert!(text.starts_with("u,omega_u,re_chi,im_chi,re_chi_damped,im_chi_damped,abs_chi\n"));
    assert!(!text.contains('\r'));
    let mut rd = csv::Reader::from_reader(bytes.as_slice());
    for (rec, row) in rd.records().zip(&rows) {
        let v: Vec<f64> = rec.unwrap().iter().map(|x| x.parse().unwrap()).collect();
        let expect = [row.u, row.omega_u, row.chi.re, row.chi.im, row.chi_damped.re, row.chi_damped.im, row.chi.norm()];
        for (a, b) in v.iter().zip(expect) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn config_parsing_and_diagnostics() {
    let cfg = RunConfig::from_json(&small_config(r#", "variant": "general", "checks": ["jarzynski"]"#)).unwrap();
    assert_eq!(cfg.variant, workcf::Variant::General);
    assert_eq!(cfg.checks, vec![Check::Jarzynski]);
    assert_eq!(cfg.scenario.cutoff, 8);
    assert_eq!(cfg.dephasing_model().unwrap().gamma, 0.5);

    let err = RunConfig::from_json(&small_config(r#", "colour": "red""#)).unwrap_err().to_string();
    assert!(err.contains("colour") && err.contains("line"), "{err}");
    let err = RunConfig::from_json(&small_config(r#", "variant": "ramsey""#)).unwrap_err().to_string();
    assert!(err.contains("ramsey"), "{err}");

    let preset = RunConfig::preset_fig2c();
    let round: RunConfig = RunConfig::from_json(&serde_json::to_string(&preset).unwrap()).unwrap();
    assert_eq!(round, preset);
}

#[test]
fn empty_grid_is_a_usage_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &small_config("").replace("[0.0, 0.5, 1.0]", "[]"));
    let out = dir.path().join("out.csv");
    let status = bin()
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("u_grid"));
    assert!(!out.exists());
}

#[test]
fn binary_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &small_config(""));
    let out = dir.path().join("out.csv");
    let res = bin()
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--variant", "general"])
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    // Cutoff 8 with n̄ = 1 is too small; the displacement warning reaches stderr.
    let res = bin()
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--cutoff", "3"])
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("raise the cutoff"));
}

#[test]
fn verify_trivial_scenario() {
    let mut cfg = RunConfig::preset_fig2c();
    cfg.scenario.cutoff = 16;
    cfg.scenario.drive = DriveProfile::TanhRamp {
        lambda_final: 0.0,
        ramp_rate: 1.0,
    };
    cfg.checks = vec![Check::Jarzynski, Check::Crooks, Check::RouteEquivalence];
    let report = cmd_verify(&cfg).unwrap();
    assert!(report.passed);
    assert!(report.checks[0].residual < 1e-12);
    assert!(report.checks[0].detail.contains("0.000e0"), "{}", report.checks[0].detail);
}

#[test]
fn verify_preset_all_checks_pass() {
    let report = cmd_verify(&RunConfig::preset_fig2c()).unwrap();
    for c in &report.checks {
        assert!(c.passed, "{c:?}");
    }
    assert!(report.passed);
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    for n in ["jarzynski", "crooks", "route_equivalence.distribution", "route_equivalence.protocol", "decomposition.appendix", "propagator", "cutoff_doubling"] {
        assert!(names.contains(&n), "{n} missing");
    }
}

#[test]
fn verify_flags_too_small_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &small_config(r#", "checks": ["jarzynski", "cutoff_doubling"]"#).replace("\"cutoff\": 8", "\"cutoff\": 4"),
    );
    let out = dir.path().join("report.json");
    let res = bin()
        .args(["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("FAIL   cutoff_doubling"), "{stdout}");
    assert!(stdout.contains("PASS   jarzynski"));
    let report: VerifyReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!report.passed);
    assert_eq!(report.checks.iter().filter(|c| !c.passed).count(), 1);

    let ok = write(dir.path(), "ok.json", &small_config(r#", "checks": ["jarzynski"]"#));
    let res = bin().args(["verify", "--config", ok.to_str().unwrap()]).output().unwrap();
    assert_eq!(res.status.code(), Some(0));
}

#[test]
fn pw_trivial_and_poisson() {
    let mut cfg = RunConfig::preset_fig2c();
    cfg.scenario.cutoff = 16;
    cfg.scenario.drive = DriveProfile::TanhRamp {
        lambda_final: 0.0,
        ramp_rate: 1.0,
    };
    let d = work_distribution(&cfg).unwrap();
    assert_eq!(d.points(), &[(0.0, 1.0)]);
    let text = String::from_utf8(pw_csv(&d).unwrap()).unwrap();
    assert_eq!(text, "W,probability\n0.0000000000000000e0,1.0000000000000000e0\n");

    // Ground state (β large) and a sudden quench to λ = 0.1.
    cfg.scenario.beta = 60.0;
    cfg.scenario.cutoff = 48;
    cfg.scenario.drive = DriveProfile::Sudden { lambda_final: 0.1 };
    let d = work_distribution(&cfg).unwrap();
    let kappa: f64 = 0.01;
    let mut fact = 1.0;
    for m in 0..4 {
        if m > 0 {
            fact *= m as f64;
        }
        let w = m as f64 - 0.01;
        let p = d.points().iter().find(|x| (x.0 - w).abs() < 1e-8).unwrap().1;
        assert!((p - (-kappa).exp() * kappa.powi(m) / fact).abs() < 1e-9, "m = {m}");
    }
}

#[test]
fn pw_preset_normalized_via_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pw.csv");
    let res = bin()
        .args(["pw", "--preset", "fig2c", "--cutoff", "24", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut rd = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["W", "probability"]);
    let total: f64 = rd.records().map(|r| r.unwrap()[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn grid_range_config() {
    let cfg = RunConfig::from_json(&small_config("").replace(
        "[0.0, 0.5, 1.0]",
        r#"{"start": 0.0, "stop": 1.0, "step": 0.25}"#,
    ))
    .unwrap();
    let expect = GridRange { start: 0.0, stop: 1.0, step: 0.25 }.expand().unwrap();
    assert_eq!(cfg.scenario.u_grid, expect);
    assert_eq!(cfg.scenario.u_grid.len(), 5);
}
