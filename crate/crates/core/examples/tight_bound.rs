//! A scalar map for which the synchronous bound is attained:
//! `f^(t)(x) = 0.5 x + 0.05 t` has fixed point `0.1 t`, drift 0.1 and a
//! steady lag of exactly `0.1 / (1 - 0.5) = 0.2`.

use fptrack::async_sim::InexactMapFamily;
use fptrack::bounds::{asymptotic_bound_sync, BoundInputs};
use fptrack::domain::DomainSpec;
use fptrack::map::MapFamily;
use fptrack::norm::{NormKind, NormSpec};
use fptrack::tracker::run_online_tracker;

fn main() -> fptrack::Result<()> {
    let base = MapFamily::new(
        "drifting-scalar",
        DomainSpec::all_space(1)?,
        NormSpec::ell_2(),
        0.5,
        |x, t| Ok(vec![0.5 * x[0] + 0.5 * 0.1 * t as f64]),
    )?
    .with_fixed_point(|t| vec![0.1 * t as f64]);
    let trace = run_online_tracker(&InexactMapFamily::exact(base), &[0.0], 400)?;
    let limsup = trace.tail_max(360);
    let bound = asymptotic_bound_sync(&BoundInputs::new(
        0.5,
        0.0,
        trace.reference.sigma_sup,
        1,
        NormKind::Ell2,
    ))?;
    println!("measured limsup {limsup:.9}");
    println!("bound           {bound:.9}");
    Ok(())
}
