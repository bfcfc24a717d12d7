use std::path::Path;
use std::process::Command;

fn fptrack(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fptrack"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const AFFINE_ASYNC: &str = r#"{"problem": {"type": "affine", "params": {"m": 4, "target_l": 0.6, "drift": {"kind": "linear", "sigma": 0.05}}},
  "mode": "async", "norm": "ell_inf", "channel": {"kind": "sawtooth", "t_d": 2}, "horizon": 600, "audit_samples": 200}"#;

#[test]
fn run_succeeds_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", AFFINE_ASYNC);
    let out = dir.path().join("out");
    let (code, stdout, _) = fptrack(&["run", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("async_inf"));
    assert!(out.join("trace.csv").exists());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["certificates_passed"], true);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(
        dir.path(),
        "u.json",
        &AFFINE_ASYNC.replace(r#""horizon""#, r#""horizn": 3, "horizon""#),
    );
    assert_eq!(fptrack(&["run", &unknown]).0, 2);
    let missing = write(
        dir.path(),
        "m.json",
        r#"{"problem": {"type": "affine"}, "mode": "sync", "horizon": 5}"#,
    );
    assert_eq!(fptrack(&["run", &missing]).0, 2);
    assert_eq!(fptrack(&["run", "/nonexistent/config.json"]).0, 2);
    // a delaying channel on a synchronous run
    let sync_delay = write(
        dir.path(),
        "s.json",
        &AFFINE_ASYNC.replace(r#""mode": "async""#, r#""mode": "sync""#),
    );
    assert_eq!(fptrack(&["run", &sync_delay]).0, 2);
    // qp requires the ell_2 norm
    let qp_inf = write(
        dir.path(),
        "q.json",
        r#"{"problem": {"type": "qp-gradient", "params": {"instance": {"kind": "random", "n": 3}}}, "mode": "sync", "norm": "ell_inf", "horizon": 10}"#,
    );
    assert_eq!(fptrack(&["run", &qp_inf]).0, 2);
    let (code, _, stderr) = fptrack(&[
        "sweep",
        &write(dir.path(), "a.json", AFFINE_ASYNC),
        "--param",
        "gamma",
        "--values",
        "1",
    ]);
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn certificate_failure_exits_with_3() {
    // five ticks are far too few for the error to settle below the static bound of zero
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"problem": {"type": "affine", "params": {"m": 3, "target_l": 0.9, "drift": {"kind": "constant"}}},
            "mode": "sync", "norm": "ell_2", "horizon": 5, "audit_samples": 0}"#,
    );
    let (code, stdout, _) = fptrack(&["run", &cfg]);
    assert_eq!(code, 3, "{stdout}");
    assert!(stdout.contains("FAIL"));
}

#[test]
fn understated_constant_fails_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"problem": {"type": "affine", "params": {"m": 4, "target_l": 0.8, "declared_l": 0.3, "drift": {"kind": "constant"}}},
                   "mode": "sync", "norm": "ell_2", "horizon": 50, "audit_samples": 300}"#;
    let cfg = write(dir.path(), "c.json", text);
    let (code, stdout, _) = fptrack(&["audit", &cfg, "--samples", "500"]);
    assert_eq!(code, 4, "{stdout}");
    assert!(stdout.contains("FAILED"));
    let honest = write(dir.path(), "h.json", &text.replace(r#""declared_l": 0.3, "#, ""));
    assert_eq!(fptrack(&["audit", &honest, "--samples", "500"]).0, 0);
}

#[test]
fn bounds_prints_every_formula() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write(
        dir.path(),
        "b.json",
        r#"{"L": 0.4, "e_f": 0.0, "sigma": 0.05, "T_d": 2, "N_d": 1, "m": 6, "norm": "ell_2"}"#,
    );
    let (code, stdout, _) = fptrack(&["bounds", &inputs]);
    assert_eq!(code, 0);
    assert!(stdout.contains("0.245371784915"), "{stdout}");
    assert!(stdout.contains("not applicable"));
    let expanding = write(
        dir.path(),
        "x.json",
        r#"{"L": 1.4, "e_f": 0.0, "sigma": 0.05, "m": 6, "norm": "ell_2"}"#,
    );
    let (code, stdout, _) = fptrack(&["bounds", &expanding]);
    assert_eq!(code, 0);
    assert_eq!(stdout.matches("not applicable").count(), 4);
    let bad = write(
        dir.path(),
        "y.json",
        r#"{"L": 0.4, "e_f": 0.0, "sigma": -1.0, "m": 6, "norm": "ell_2"}"#,
    );
    assert_eq!(fptrack(&["bounds", &bad]).0, 2);
}

#[test]
fn sweep_reports_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &AFFINE_ASYNC.replace(r#""audit_samples": 200"#, r#""audit_samples": 0"#),
    );
    let (code, stdout, _) = fptrack(&["sweep", &cfg, "--param", "t_d", "--values", "0,1,3"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("bound strictly increasing: true"));
    assert_eq!(stdout.lines().filter(|l| l.contains("pass")).count(), 3);
}

#[test]
fn shipped_configs_run_cleanly() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let out = tempfile::tempdir().unwrap();
    for name in [
        "affine_sync_l2",
        "affine_async_l2_chain",
        "affine_async_schedule",
        "loadflow_static_drop",
    ] {
        let cfg = configs.join(format!("{name}.json"));
        let (code, stdout, stderr) = fptrack(&[
            "run",
            cfg.to_str().unwrap(),
            "--output",
            out.path().join(name).to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{name}: {stdout}{stderr}");
    }
}
