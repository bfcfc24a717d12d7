//! Admissible step sizes of the regularized projected-gradient map as the
//! number of stale neighbours grows.

use fptrack::bounds::{gradient_step_window, min_regularization};
use fptrack::problems::{gradient_map_lipschitz, TimeVaryingQp};

fn main() -> fptrack::Result<()> {
    let qp = TimeVaryingQp::random(6, 11);
    let m = qp.smoothness();
    println!("M = {m:.4}, eta = {:.4}", qp.eta);
    for n_d in [0, 1, 3, 8] {
        let window = gradient_step_window(m, qp.eta, n_d)?;
        let needed = min_regularization(m, n_d);
        if window.is_empty() {
            println!("N_d {n_d}: empty window (needs eta > {needed:.4})");
            continue;
        }
        let mid = 0.5 * (window.lo + window.hi);
        let l = gradient_map_lipschitz(&qp, mid);
        println!(
            "N_d {n_d}: alpha in ({:.4}, {:.4}); at {mid:.4} L = {l:.4}, L·√(N_d+1) = {:.4}",
            window.lo,
            window.hi,
            l * ((n_d + 1) as f64).sqrt()
        );
    }
    Ok(())
}
