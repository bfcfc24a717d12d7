//! Batch fixed-point iteration and the reference series `x^(*,t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::MapFamily;
use crate::norm::NormSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    /// Tolerance 1e-12 with at most 10^5 iterations: reference points must be
    /// far more accurate than any tracker error they are compared against.
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

/// Iterates `x <- f^(t)(x)` from `x0` until `‖x - f^(t)(x)‖ <= tol` in the
/// map's norm and returns that `x`.
pub fn solve_fixed_point(map: &MapFamily, t: usize, x0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::PreconditionFailed("tolerance must be positive".into()));
    }
    let domain = map.domain();
    if !domain.contains(x0) {
        return Err(Error::DomainViolation {
            t,
            detail: "initial point is outside the domain".into(),
        });
    }
    let norm = map.norm();
    let mut x = x0.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..=max_iter {
        let fx = map.evaluate(&x, t)?;
        residual = norm.dist(&x, &fx);
        if residual <= tol {
            return Ok(x);
        }
        if !domain.contains(&fx) {
            return Err(Error::DomainViolation {
                t,
                detail: format!("batch iterate left the domain of '{}'", map.name()),
            });
        }
        x = fx;
    }
    Err(Error::NonConvergence {
        t,
        iterations: max_iter,
        residual,
    })
}

/// Reference fixed points over a finite horizon together with the drift
/// `σ^(t) = ‖x^(*,t+1) - x^(*,t)‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSeries {
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// `sigma_series[k]` is `σ^(k+1)`, so its length is `horizon - 1`.
    pub sigma_series: Vec<f64>,
    /// Maximum of `sigma_series` over the horizon (zero when `horizon == 1`).
    pub sigma_sup: f64,
}

impl FixedPointSeries {
    pub fn horizon(&self) -> usize {
        self.points.len()
    }

    /// `x^(*,t)` for `t` in `1..=horizon`.
    pub fn point(&self, t: usize) -> &[f64] {
        &self.points[t - 1]
    }

    /// `σ^(t)` for `t` in `1..horizon`.
    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma_series[t - 1]
    }

    /// Builds the drift series from given points.
    pub fn from_points(points: Vec<Vec<f64>>, residuals: Vec<f64>, norm: &NormSpec) -> Self {
        let sigma_series: Vec<f64> = points.windows(2).map(|w| norm.dist(&w[1], &w[0])).collect();
        let sigma_sup = sigma_series.iter().copied().fold(0.0, f64::max);
        Self {
            points,
            residuals,
            sigma_series,
            sigma_sup,
        }
    }
}

/// Computes `x^(*,t)` for `t = 1..=horizon`, each warm-started from the
/// previous one. Families with a closed form use it directly; residuals are
/// still evaluated and checked against `tol`.
pub fn compute_fixed_point_series(
    map: &MapFamily,
    horizon: usize,
    norm: &NormSpec,
    opts: SolverOptions,
) -> Result<FixedPointSeries> {
    if horizon == 0 {
        return Err(Error::PreconditionFailed("horizon must be positive".into()));
    }
    let mut points = Vec::with_capacity(horizon);
    let mut residuals = Vec::with_capacity(horizon);
    let mut warm = map.domain().center();
    for t in 1..=horizon {
        let x = match map.closed_form_fixed_point(t) {
            Some(x) if x.len() == map.dim() => x,
            _ => solve_fixed_point(map, t, &warm, opts.tol, opts.max_iter)?,
        };
        let fx = map.evaluate(&x, t)?;
        let residual = map.norm().dist(&x, &fx);
        if residual > opts.tol {
            // closed forms carry rounding; polish with the batch iteration
            let polished = solve_fixed_point(map, t, &x, opts.tol, opts.max_iter)?;
            let fx = map.evaluate(&polished, t)?;
            residuals.push(map.norm().dist(&polished, &fx));
            warm = polished.clone();
            points.push(polished);
            continue;
        }
        residuals.push(residual);
        warm = x.clone();
        points.push(x);
    }
    Ok(FixedPointSeries::from_points(points, residuals, norm))
}
