//! Sweeps the drop probability of a load-flow run with sinusoidal injections
//! and reports median tail errors over 20 seeds.

use fptrack::experiment::{sweep, ExperimentConfig, SweepParam};

fn main() -> fptrack::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{"problem": {"type": "loadflow",
                        "params": {"network": {"builtin": "twelve_bus_three_area"},
                                   "profile": {"kind": "sine", "amplitude": 0.2, "period": 100}}},
            "mode": "async", "channel": {"kind": "iid_drop", "probability": 0.0},
            "horizon": 2000, "seed": 1, "replicates": 20, "audit_samples": 0}"#,
    )?;
    let report = sweep(&cfg, None, SweepParam::DropProbability, &[0.0, 0.01, 0.1, 0.3])?;
    println!("{report}");
    Ok(())
}
