//! The synchronous running algorithm `x^(t+1) = f̃^(t)(x^(t))`.

use serde::{Deserialize, Serialize};

use crate::async_sim::{DelayStats, InexactMapFamily};
use crate::error::{check_len, Error, Result};
use crate::norm::NormSpec;
use crate::solver::{compute_fixed_point_series, FixedPointSeries, SolverOptions};

/// Iterates, reference fixed points and per-step errors of one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrackingTrace {
    /// `x^(1), ..., x^(T)`.
    pub iterates: Vec<Vec<f64>>,
    pub reference: FixedPointSeries,
    /// `errors[t-1] = ‖x^(t) - x^(*,t)‖`.
    pub errors: Vec<f64>,
    pub norm: NormSpec,
    pub seed: Option<u64>,
    /// `e_f^(t)` for `t = 1..T-1`.
    pub e_f_series: Vec<f64>,
    /// Declared `L^(t)` for `t = 1..T-1`.
    pub lipschitz_series: Vec<f64>,
    /// Realized channel statistics; `None` for synchronous runs.
    pub delay: Option<DelayStats>,
}

impl TrackingTrace {
    pub fn horizon(&self) -> usize {
        self.iterates.len()
    }

    /// Maximum error over ticks `t > start` (1-based), i.e. the tail window.
    pub fn tail_max(&self, start: usize) -> f64 {
        self.errors
            .iter()
            .skip(start.min(self.errors.len().saturating_sub(1)))
            .copied()
            .fold(0.0, f64::max)
    }

    /// Errors recomputed in another norm.
    pub fn errors_in(&self, norm: &NormSpec) -> Vec<f64> {
        self.iterates
            .iter()
            .zip(&self.reference.points)
            .map(|(x, r)| norm.dist(x, r))
            .collect()
    }
}

/// `‖iterates[t] - reference[t]‖` for every `t`.
pub fn tracking_error(iterates: &[Vec<f64>], reference: &FixedPointSeries, norm: &NormSpec) -> Result<Vec<f64>> {
    check_len(reference.points.len(), iterates.len())?;
    iterates
        .iter()
        .zip(&reference.points)
        .map(|(x, r)| {
            check_len(r.len(), x.len())?;
            Ok(norm.dist(x, r))
        })
        .collect()
}

/// Runs the tracker for `horizon` ticks (`horizon - 1` map applications) and
/// compares against reference points computed independently per tick.
pub fn run_online_tracker(map: &InexactMapFamily, x0: &[f64], horizon: usize) -> Result<TrackingTrace> {
    let base = map.base();
    let reference = compute_fixed_point_series(base, horizon, base.norm(), SolverOptions::default())?;
    run_online_tracker_with_reference(map, x0, reference)
}

/// As [`run_online_tracker`] with a precomputed reference series; the horizon
/// is the reference length.
pub fn run_online_tracker_with_reference(
    map: &InexactMapFamily,
    x0: &[f64],
    reference: FixedPointSeries,
) -> Result<TrackingTrace> {
    let horizon = reference.horizon();
    let base = map.base();
    let domain = base.domain();
    check_len(base.dim(), x0.len())?;
    if !domain.contains(x0) {
        return Err(Error::DomainViolation {
            t: 1,
            detail: "initial point is outside the domain".into(),
        });
    }
    let mut iterates = Vec::with_capacity(horizon);
    iterates.push(x0.to_vec());
    for t in 1..horizon {
        let next = map.evaluate(&iterates[t - 1], t)?;
        if !domain.contains(&next) {
            return Err(Error::DomainViolation {
                t: t + 1,
                detail: format!("tracker iterate left the domain of '{}'", base.name()),
            });
        }
        iterates.push(next);
    }
    let norm = base.norm().clone();
    let errors = tracking_error(&iterates, &reference, &norm)?;
    Ok(TrackingTrace {
        iterates,
        reference,
        errors,
        norm,
        seed: None,
        e_f_series: (1..horizon).map(|t| map.e_f_bound(t)).collect(),
        lipschitz_series: (1..horizon).map(|t| base.lipschitz(t)).collect(),
        delay: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::async_sim::Perturbation;
    use crate::domain::DomainSpec;
    use crate::map::MapFamily;

    fn scalar(drift: f64) -> MapFamily {
        MapFamily::new(
            "scalar",
            DomainSpec::all_space(1).unwrap(),
            NormSpec::ell_2(),
            0.5,
            move |x, t| Ok(vec![0.5 * x[0] + 1.0 + 0.5 * drift * t as f64]),
        )
        .unwrap()
    }

    #[test]
    fn static_errors_halve_each_step() {
        let f = InexactMapFamily::exact(scalar(0.0));
        let tr = run_online_tracker(&f, &[0.0], 30).unwrap();
        for (k, e) in tr.errors.iter().enumerate() {
            let t = k + 1;
            assert!((e - 2.0 * 0.5f64.powi(t as i32 - 1)).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn horizon_one_returns_initial_error() {
        let f = InexactMapFamily::exact(scalar(0.0));
        let tr = run_online_tracker(&f, &[0.0], 1).unwrap();
        assert_eq!(tr.errors.len(), 1);
        assert!((tr.errors[0] - 2.0).abs() < 1e-11);
        assert!(tr.e_f_series.is_empty());
    }

    #[test]
    fn constant_offset_limsup() {
        let f = InexactMapFamily::with_perturbation(scalar(0.0), Perturbation::constant(0.01)).unwrap();
        let tr = run_online_tracker(&f, &[0.0], 1000).unwrap();
        assert!(tr.tail_max(900) <= 0.02 + 1e-9);
        assert!(tr.tail_max(900) >= 0.02 - 1e-9);
    }

    #[test]
    fn tracking_error_length_mismatch() {
        let series = FixedPointSeries::from_points(vec![vec![0.0]; 3], vec![0.0; 3], &NormSpec::ell_2());
        assert!(matches!(
            tracking_error(&[vec![0.0]], &series, &NormSpec::ell_2()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tracking_error_constant_shift() {
        let pts: Vec<Vec<f64>> = (0..5).map(|k| vec![k as f64, -(k as f64)]).collect();
        let series = FixedPointSeries::from_points(pts.clone(), vec![0.0; 5], &NormSpec::ell_inf());
        let shifted: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] + 0.3, p[1] - 0.1]).collect();
        let e = tracking_error(&shifted, &series, &NormSpec::ell_inf()).unwrap();
        assert!(e.iter().all(|v| (v - 0.3).abs() < 1e-12));
        let z = tracking_error(&pts, &series, &NormSpec::ell_inf()).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }
}
