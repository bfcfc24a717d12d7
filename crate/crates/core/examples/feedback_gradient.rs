//! Feedback projected gradient on a time-varying QP: the coupled output is
//! measured with bounded noise and broadcast through a relay hub that drops
//! packets. Compares synchronous and asynchronous tail errors at the default
//! step `1/(M+η)` and at the larger step `1.5/(M+η)`.

use fptrack::experiment::{apply_param, build_instance, run_experiment, ExperimentConfig, SweepParam};

fn config(mode: &str, channel: &str) -> String {
    format!(
        r#"{{"problem": {{"type": "qp-gradient",
                        "params": {{"instance": {{"kind": "random", "n": 7}}, "noise_bound": 0.001}},
                        "instance_seed": 4}},
            "mode": "{mode}", {channel} "horizon": 1000, "seed": 3, "replicates": 20, "audit_samples": 0}}"#
    )
}

fn main() -> fptrack::Result<()> {
    let sync = ExperimentConfig::from_json(&config("sync", ""))?;
    let default_alpha = build_instance(&sync, None, 0)?.qp.map(|(_, a)| a).unwrap_or(0.0);
    for scale in [1.0, 1.5] {
        let alpha = scale * default_alpha;
        for (mode, channel) in [
            ("sync", ""),
            ("async", r#""channel": {"kind": "iid_drop", "probability": 0.1},"#),
        ] {
            let cfg = apply_param(
                &ExperimentConfig::from_json(&config(mode, channel))?,
                SweepParam::Alpha,
                alpha,
            )?;
            let out = run_experiment(&cfg, None)?;
            println!(
                "alpha {alpha:.4} {mode:>5}: median tail error {:.4e}, L {:.4}, e_f {:.3e}, certificates {}",
                out.report.median_tail_error,
                out.report.runs[0].inputs.lipschitz,
                out.report.runs[0].inputs.e_f,
                if out.report.certificates_passed { "pass" } else { "FAIL" },
            );
        }
    }
    Ok(())
}
