//! Samples each shipped family to check its declared Lipschitz constant,
//! self-mapping, oracle accuracy and dependency graph.

use fptrack::experiment::{audit_config, ExperimentConfig};

const CONFIGS: [(&str, &str); 4] = [
    (
        "affine ell_2",
        r#"{"problem": {"type": "affine", "params": {"m": 8, "target_l": 0.8, "drift": {"kind": "linear", "sigma": 0.05}, "e_f": 0.01}},
            "mode": "sync", "norm": "ell_2", "horizon": 200}"#,
    ),
    (
        "affine ell_inf",
        r#"{"problem": {"type": "affine", "params": {"m": 4, "target_l": 0.6, "drift": {"kind": "linear", "sigma": 0.05}}},
            "mode": "sync", "norm": "ell_inf", "horizon": 200}"#,
    ),
    (
        "feedback gradient",
        r#"{"problem": {"type": "qp-gradient", "params": {"instance": {"kind": "random", "n": 7}, "noise_bound": 0.01}},
            "mode": "sync", "horizon": 200}"#,
    ),
    (
        "multi-area load flow",
        r#"{"problem": {"type": "loadflow", "params": {"network": {"builtin": "twelve_bus_three_area"},
                        "profile": {"kind": "random_walk", "step": 0.01, "band": 0.3}, "noise_bound": 0.001}},
            "mode": "sync", "horizon": 200}"#,
    ),
];

fn main() -> fptrack::Result<()> {
    for (name, text) in CONFIGS {
        let cfg = ExperimentConfig::from_json(text)?;
        let a = audit_config(&cfg, None, 2000)?;
        println!(
            "{name:<22} declared L {:.4}  sampled {:.4}  self-map {}  e_f {}  graph {}  => {}",
            a.declared_lipschitz,
            a.family.lipschitz_estimate,
            a.family.self_map_ok,
            a.family.e_f_ok,
            a.dependency.consistent,
            if a.passed() { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
