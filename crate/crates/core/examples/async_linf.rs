//! Four scalar agents tracking an ℓ∞ contraction while messages arrive with
//! a sawtooth delay of up to three ticks.

use fptrack::async_sim::{run_async_tracker, ChannelModel, InexactMapFamily};
use fptrack::bounds::{BoundInputs, BoundTable};
use fptrack::norm::NormKind;
use fptrack::problems::{build_affine_family, DriftSpec};

fn main() -> fptrack::Result<()> {
    let family = build_affine_family(4, NormKind::EllInf, 0.6, DriftSpec::Linear { sigma: 0.05 }, 3)?;
    let graph = family.graph().clone();
    let map = InexactMapFamily::exact(family.into_family());
    for phase_seed in 0..3 {
        let channels = ChannelModel::sawtooth(&graph, 3, phase_seed);
        let run = run_async_tracker(&map, &graph, &channels, &[0.0; 4], 5000)?;
        let inputs = BoundInputs::new(0.6, 0.0, run.trace.reference.sigma_sup, 4, NormKind::EllInf)
            .with_delay(run.stats.t_d, run.stats.n_d);
        let table = BoundTable::evaluate(&inputs);
        println!(
            "phase seed {phase_seed}: T_d {}, N_d {}, tail max {:.6}, bound {}",
            run.stats.t_d,
            run.stats.n_d,
            run.trace.tail_max(4500),
            table.async_inf
        );
    }
    Ok(())
}
