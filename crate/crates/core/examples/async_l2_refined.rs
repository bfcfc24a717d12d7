//! Six scalar agents on a chain with at most one stale neighbour per read:
//! the refined ℓ2 bound uses `√(N_d+1)` instead of `√m`.

use fptrack::experiment::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"{
  "problem": {
    "type": "affine",
    "params": { "m": 6, "target_l": 0.4, "drift": { "kind": "linear", "sigma": 0.05 },
                "coupling": "chain", "scaling": "frobenius" }
  },
  "mode": "async",
  "norm": "ell_2",
  "channel": { "kind": "periodic", "delays": [0, 1, 2, 0], "reverse_delays": [2, 0, 0, 1] },
  "horizon": 4000
}"#;

fn main() -> fptrack::Result<()> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let out = run_experiment(&cfg, None)?;
    let run = &out.report.runs[0];
    println!("realized T_d {}, N_d {}", run.inputs.t_d, run.inputs.n_d);
    println!("bounds:\n{}", run.bounds);
    for c in &run.certificates {
        println!(
            "{:<18} {:?} observed {:?} bound {:?}",
            c.name, c.status, c.observed, c.bound
        );
    }
    Ok(())
}
