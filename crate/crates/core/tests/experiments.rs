use std::path::Path;

use fptrack::experiment::{run_experiment, sweep, CertificateStatus, ExperimentConfig, SweepParam, CSV_HEADER};
use fptrack::Error;

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

#[test]
fn relative_paths_resolve_against_the_config() {
    let dir = configs_dir();
    let sched = ExperimentConfig::from_path(dir.join("affine_async_schedule.json")).unwrap();
    let out = run_experiment(&ExperimentConfig { output: None, ..sched }, Some(dir)).unwrap();
    let run = &out.report.runs[0];
    assert_eq!(run.inputs.t_d, 3);
    assert!(out.report.certificates_passed);

    let lf = ExperimentConfig::from_path(dir.join("loadflow_static_drop.json")).unwrap();
    let lf = ExperimentConfig {
        output: None,
        horizon: 100,
        ..lf
    };
    assert!(run_experiment(&lf, Some(dir)).is_ok());
    // without the base directory the network file cannot be found
    assert!(run_experiment(&lf, Some(Path::new("/nonexistent"))).is_err());
}

#[test]
fn unknown_fields_and_bad_values_are_config_errors() {
    let bad = [
        r#"{"problem": {"type": "affine", "params": {"m": 2, "target_l": 0.5, "drift": {"kind": "constant"}, "extra": 1}}, "mode": "sync", "horizon": 5}"#,
        r#"{"problem": {"type": "affine", "params": {"m": 2, "target_l": 0.5, "drift": {"kind": "constant"}}}, "mode": "sometimes", "horizon": 5}"#,
        r#"{"problem": {"type": "affine", "params": {"m": 2, "target_l": 0.5, "drift": {"kind": "constant"}}}, "mode": "async", "channel": {"kind": "iid_drop", "probability": 1.5}, "horizon": 5}"#,
        r#"{"problem": {"type": "loadflow", "params": {"network": {"builtin": "twelve_bus_three_area"}, "decomposition": "monolithic", "noise_bound": 0.01}}, "mode": "sync", "horizon": 5}"#,
    ];
    for text in bad {
        let r = ExperimentConfig::from_json(text).and_then(|c| c.validate().map(|_| c));
        assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
    }
}

#[test]
fn trace_csv_has_fixed_layout_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = |out: &Path| {
        format!(
            r#"{{"problem": {{"type": "affine", "params": {{"m": 3, "target_l": 0.7, "drift": {{"kind": "linear", "sigma": 0.02}}, "e_f": 0.01}}}},
                "mode": "sync", "norm": "ell_2", "horizon": 50, "seed": 5, "output": "{}"}}"#,
            out.display()
        )
    };
    for name in ["a", "b"] {
        let cfg = ExperimentConfig::from_json(&text(&dir.path().join(name))).unwrap();
        run_experiment(&cfg, None).unwrap();
    }
    let a = std::fs::read(dir.path().join("a/trace.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b/trace.csv")).unwrap());

    let mut reader = csv::Reader::from_reader(a.as_slice());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 50);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), k + 1);
        let error: f64 = row[1].parse().unwrap();
        let bound: f64 = row[2].parse().unwrap();
        assert!(error <= bound + 1e-9);
        assert!(row[1].contains('e'));
        assert_eq!(&row[4], "0");
    }
}

#[test]
fn replicates_share_the_instance_but_not_the_noise() {
    let cfg = ExperimentConfig::from_json(
        r#"{"problem": {"type": "qp-gradient", "params": {"instance": {"kind": "random", "n": 4}, "noise_bound": 0.01}},
            "mode": "sync", "horizon": 60, "replicates": 3, "audit_samples": 0}"#,
    )
    .unwrap();
    let out = run_experiment(&cfg, None).unwrap();
    let runs = &out.runs;
    assert_eq!(runs.len(), 3);
    assert_eq!(runs[0].trace.reference.points, runs[1].trace.reference.points);
    assert_ne!(runs[0].trace.errors, runs[1].trace.errors);
    let seeds: Vec<u64> = out.report.runs.iter().map(|r| r.seed).collect();
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
}

#[test]
fn sweep_writes_rows_and_per_value_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{"problem": {{"type": "affine", "params": {{"m": 4, "target_l": 0.5, "drift": {{"kind": "linear", "sigma": 0.05}}}}}},
            "mode": "async", "norm": "ell_inf", "channel": {{"kind": "iid_drop", "probability": 0.0}},
            "horizon": 300, "replicates": 3, "audit_samples": 0, "output": "{}"}}"#,
        dir.path().display()
    ))
    .unwrap();
    let report = sweep(&cfg, None, SweepParam::DropProbability, &[0.0, 0.2, 0.5]).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.rows.iter().all(|r| r.certificates_passed));
    assert!(report.bound_strictly_increasing);
    assert!(dir.path().join("sweep.json").exists());
    assert!(dir.path().join("drop_probability=0.2/report.json").exists());
    let back: fptrack::experiment::SweepReport =
        serde_json::from_slice(&std::fs::read(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(back.rows.len(), 3);
}

#[test]
fn qp_certificates_cover_the_step_window() {
    let cfg = ExperimentConfig::from_json(
        r#"{"problem": {"type": "qp-gradient", "params": {"instance": {"kind": "random", "n": 5}, "noise_bound": 0.005}},
            "mode": "sync", "horizon": 400, "audit_samples": 200}"#,
    )
    .unwrap();
    let out = run_experiment(&cfg, None).unwrap();
    let run = &out.report.runs[0];
    assert_eq!(run.in_step_window, Some(true));
    assert_eq!(run.certificate("sync").unwrap().status, CertificateStatus::Pass);
    assert_eq!(run.certificate("per_iterate").unwrap().status, CertificateStatus::Pass);
    assert_eq!(out.report.audit_passed, Some(true));
}
