//! Synchronous tracking of a drifting affine contraction with an inexact
//! oracle, checked against the finite-time and asymptotic bounds.

use fptrack::async_sim::{InexactMapFamily, Perturbation};
use fptrack::bounds::{asymptotic_bound_sync, per_iterate_bound_series, BoundInputs};
use fptrack::norm::NormKind;
use fptrack::problems::{build_affine_family, DriftSpec};
use fptrack::tracker::run_online_tracker;

fn main() -> fptrack::Result<()> {
    let family = build_affine_family(8, NormKind::Ell2, 0.8, DriftSpec::Linear { sigma: 0.05 }, 1)?;
    let map = InexactMapFamily::with_perturbation(family.into_family(), Perturbation::uniform(0.01, 7))?;
    let x0 = vec![0.0; 8];
    let trace = run_online_tracker(&map, &x0, 2000)?;

    let bound = per_iterate_bound_series(
        trace.errors[0],
        &trace.e_f_series,
        &trace.reference.sigma_series,
        &trace.lipschitz_series,
    )?;
    let worst_gap = trace
        .errors
        .iter()
        .zip(&bound)
        .map(|(e, b)| e - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let inputs = BoundInputs::new(0.8, 0.01, trace.reference.sigma_sup, 8, NormKind::Ell2);
    let asymptotic = asymptotic_bound_sync(&inputs)?;
    let tail = trace.tail_max(1800);

    println!("initial error        {:.6}", trace.errors[0]);
    println!("max(error - bound)   {worst_gap:.3e}  (never positive)");
    println!("tail max error       {tail:.6}");
    println!("asymptotic bound     {asymptotic:.6}");
    Ok(())
}
