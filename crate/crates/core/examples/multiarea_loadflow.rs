//! Multi-area Z-bus load flow on a 12-bus feeder split into three areas.
//! Checks the area equations against the monolithic solution and runs the
//! areas asynchronously with half of all messages dropped.

use fptrack::experiment::{run_experiment, ExperimentConfig};
use fptrack::problems::{build_multiarea_maps, Injection, MeasurementNoise, MultiAreaOptions, PowerNetwork};

fn main() -> fptrack::Result<()> {
    let net = PowerNetwork::twelve_bus_three_area();
    let injection = Injection::constant(&net.injections);
    let ma = build_multiarea_maps(
        &net,
        &injection,
        10,
        MeasurementNoise::uniform(0.0, 0),
        &MultiAreaOptions::for_areas(3),
    )?;
    let v_star = &ma.reference[0];
    let image = ma.family.base().evaluate(v_star, 1)?;
    let gap = image.iter().zip(v_star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("declared L {:.4}", ma.family.base().lipschitz(1));
    println!("area maps at the monolithic solution move it by {gap:.2e}");

    let cfg = ExperimentConfig::from_json(
        r#"{"problem": {"type": "loadflow", "params": {"network": {"builtin": "twelve_bus_three_area"}}},
            "mode": "async", "channel": {"kind": "iid_drop", "probability": 0.5}, "horizon": 500}"#,
    )?;
    let out = run_experiment(&cfg, None)?;
    let errors = &out.runs[0].trace.errors;
    let first_below = errors.iter().position(|e| *e <= 1e-8);
    println!(
        "error after 500 ticks {:.3e}, first tick below 1e-8: {:?}",
        errors[errors.len() - 1],
        first_below.map(|k| k + 1)
    );
    Ok(())
}
