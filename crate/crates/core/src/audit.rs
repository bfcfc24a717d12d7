//! Sampling checks of the declared self-map, contraction and inexactness
//! properties.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::async_sim::InexactMapFamily;
use crate::domain::{unit_ball_ell2, DomainSpec};
use crate::error::Result;
use crate::map::MapFamily;
use crate::norm::NormSpec;
use crate::rng::stream;

/// Slack added to declared constants before an estimate counts as a violation.
pub const AUDIT_SLACK: f64 = 1e-9;

/// Pairs closer than this are skipped by [`estimate_lipschitz`]: their
/// difference quotient is dominated by rounding rather than by the map.
pub const MIN_PAIR_DISTANCE: f64 = 1e-5;

/// Seeded sampler of domain points and point pairs.
///
/// Half of the pairs are independent draws; the other half are local pairs
/// (a point and a small perturbation of it, projected back onto the domain),
/// which probe the local slope of nonlinear maps.
#[derive(Clone, Debug)]
pub struct DomainSampler {
    domain: DomainSpec,
    rng: ChaCha8Rng,
    fallback_radius: f64,
}

impl DomainSampler {
    pub fn new(domain: DomainSpec, seed: u64) -> Self {
        Self {
            domain,
            rng: stream(seed, &[0x4155_4454]),
            fallback_radius: 10.0,
        }
    }

    /// Sampling radius used for unbounded domains.
    pub fn with_fallback_radius(mut self, r: f64) -> Self {
        self.fallback_radius = r;
        self
    }

    pub fn point(&mut self) -> Vec<f64> {
        self.domain.sample(&mut self.rng, self.fallback_radius)
    }

    pub fn pair(&mut self) -> (Vec<f64>, Vec<f64>) {
        let x = self.point();
        if self.rng.random_bool(0.5) {
            (x, self.point())
        } else {
            let scale = 10f64.powf(self.rng.random_range(-4.0..-1.0));
            let dir = unit_ball_ell2(&mut self.rng, x.len());
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + scale * d).collect();
            let y = self.domain.project(&y);
            (x, y)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// Largest observed ratio: a lower bound on the true constant.
    pub estimate: f64,
    pub pairs_used: usize,
    /// Set when no pair was far enough apart to use.
    pub insufficient_sampling: bool,
}

/// Maximum of `‖f(x) - f(x')‖ / ‖x - x'‖` over `n_pairs` sampled pairs.
pub fn estimate_lipschitz(
    map: &MapFamily,
    t: usize,
    sampler: &mut DomainSampler,
    n_pairs: usize,
    norm: &NormSpec,
) -> Result<LipschitzEstimate> {
    let mut estimate = 0.0f64;
    let mut used = 0;
    for _ in 0..n_pairs {
        let (x, y) = sampler.pair();
        let d = norm.dist(&x, &y);
        if d < MIN_PAIR_DISTANCE {
            continue;
        }
        let fx = map.evaluate(&x, t)?;
        let fy = map.evaluate(&y, t)?;
        estimate = estimate.max(norm.dist(&fx, &fy) / d);
        used += 1;
    }
    Ok(LipschitzEstimate {
        estimate,
        pairs_used: used,
        insufficient_sampling: used == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfMapCheck {
    pub holds: bool,
    /// First sampled point whose image left the domain.
    pub counterexample: Option<Vec<f64>>,
    pub samples: usize,
}

/// Checks `f^(t)(x) ∈ D` on `n_samples` sampled points.
pub fn verify_self_map(
    map: &MapFamily,
    t: usize,
    sampler: &mut DomainSampler,
    n_samples: usize,
) -> Result<SelfMapCheck> {
    for k in 0..n_samples {
        let x = sampler.point();
        let fx = map.evaluate(&x, t)?;
        if !map.domain().contains(&fx) {
            return Ok(SelfMapCheck {
                holds: false,
                counterexample: Some(x),
                samples: k + 1,
            });
        }
    }
    Ok(SelfMapCheck {
        holds: true,
        counterexample: None,
        samples: n_samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InexactnessCheck {
    pub max_deviation: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `‖f̃^(t)(x) - f^(t)(x)‖ <= e_f^(t)` and `f̃^(t)(x) ∈ D` on sampled points.
pub fn verify_inexactness(
    map: &InexactMapFamily,
    t: usize,
    sampler: &mut DomainSampler,
    n_samples: usize,
) -> Result<InexactnessCheck> {
    let base = map.base();
    let bound = map.e_f_bound(t);
    let mut max_dev = 0.0f64;
    let mut in_domain = true;
    for _ in 0..n_samples {
        let x = sampler.point();
        let approx = map.evaluate(&x, t)?;
        in_domain &= base.domain().contains(&approx);
        max_dev = max_dev.max(base.norm().dist(&approx, &base.evaluate(&x, t)?));
    }
    Ok(InexactnessCheck {
        max_deviation: max_dev,
        bound,
        holds: in_domain && max_dev <= bound + AUDIT_SLACK,
    })
}

/// Combined audit of one family over a set of time indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub times: Vec<usize>,
    pub lipschitz_estimate: f64,
    /// Smallest margin `declared L^(t) - estimate` over the audited times.
    pub lipschitz_margin: f64,
    pub lipschitz_ok: bool,
    pub insufficient_sampling: bool,
    pub self_map_ok: bool,
    pub counterexample: Option<Vec<f64>>,
    pub e_f_max_deviation: f64,
    pub e_f_bound: f64,
    pub e_f_ok: bool,
}

impl AuditSummary {
    pub fn passed(&self) -> bool {
        self.lipschitz_ok && self.self_map_ok && self.e_f_ok && !self.insufficient_sampling
    }
}

/// Runs all three audits at each of `times` with `n_samples` points/pairs each.
pub fn audit_family(map: &InexactMapFamily, times: &[usize], n_samples: usize, seed: u64) -> Result<AuditSummary> {
    let base = map.base();
    let mut summary = AuditSummary {
        times: times.to_vec(),
        lipschitz_estimate: 0.0,
        lipschitz_margin: f64::INFINITY,
        lipschitz_ok: true,
        insufficient_sampling: false,
        self_map_ok: true,
        counterexample: None,
        e_f_max_deviation: 0.0,
        e_f_bound: 0.0,
        e_f_ok: true,
    };
    for &t in times {
        let mut sampler = DomainSampler::new(base.domain().clone(), crate::rng::derive_seed(seed, &[t as u64]));
        let est = estimate_lipschitz(base, t, &mut sampler, n_samples, base.norm())?;
        let declared = base.lipschitz(t);
        summary.lipschitz_estimate = summary.lipschitz_estimate.max(est.estimate);
        summary.lipschitz_margin = summary.lipschitz_margin.min(declared - est.estimate);
        summary.lipschitz_ok &= est.estimate <= declared + AUDIT_SLACK;
        summary.insufficient_sampling |= est.insufficient_sampling;

        let sm = verify_self_map(base, t, &mut sampler, n_samples)?;
        if !sm.holds && summary.self_map_ok {
            summary.self_map_ok = false;
            summary.counterexample = sm.counterexample;
        }

        let inx = verify_inexactness(map, t, &mut sampler, n_samples)?;
        summary.e_f_max_deviation = summary.e_f_max_deviation.max(inx.max_deviation);
        summary.e_f_bound = summary.e_f_bound.max(inx.bound);
        summary.e_f_ok &= inx.holds;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormKind;
    use nalgebra::Matrix2;

    fn linear(a: [[f64; 2]; 2], l: f64) -> MapFamily {
        MapFamily::new(
            "linear",
            DomainSpec::ball(vec![0.0, 0.0], 1.0, NormKind::Ell2).unwrap(),
            NormSpec::ell_2(),
            l,
            move |x, _| Ok(vec![a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]),
        )
        .unwrap()
    }

    #[test]
    fn halving_map_estimate() {
        let f = linear([[0.5, 0.0], [0.0, 0.5]], 0.5);
        let mut s = DomainSampler::new(f.domain().clone(), 1);
        let e = estimate_lipschitz(&f, 1, &mut s, 200, &NormSpec::ell_2()).unwrap();
        assert!((e.estimate - 0.5).abs() < 1e-12);
        assert!(!e.insufficient_sampling);
    }

    #[test]
    fn triangular_map_estimate_matches_spectral_norm() {
        let a = [[0.3, 0.2], [0.0, 0.4]];
        let sv = Matrix2::new(0.3, 0.2, 0.0, 0.4).singular_values();
        let spectral = sv.max();
        let f = linear(a, spectral);
        let mut s = DomainSampler::new(f.domain().clone(), 2);
        let e = estimate_lipschitz(&f, 1, &mut s, 10_000, &NormSpec::ell_2()).unwrap();
        assert!(e.estimate <= spectral + 1e-12);
        assert!(e.estimate >= spectral - 1e-3);
    }

    #[test]
    fn cosine_estimate_below_mean_value_bound() {
        let f = MapFamily::new(
            "cos",
            DomainSpec::boxed(vec![0.0], vec![1.0]).unwrap(),
            NormSpec::ell_2(),
            1f64.sin(),
            |x, _| Ok(vec![x[0].cos()]),
        )
        .unwrap();
        let mut s = DomainSampler::new(f.domain().clone(), 3);
        let e = estimate_lipschitz(&f, 1, &mut s, 10_000, &NormSpec::ell_2()).unwrap();
        assert!(e.estimate <= 1f64.sin() + 1e-9);
        assert!(e.estimate > 0.8);
    }

    #[test]
    fn degenerate_domain_flags_insufficient_sampling() {
        let f = MapFamily::new(
            "point",
            DomainSpec::boxed(vec![1.0], vec![1.0]).unwrap(),
            NormSpec::ell_2(),
            0.5,
            |_, _| Ok(vec![1.0]),
        )
        .unwrap();
        let mut s = DomainSampler::new(f.domain().clone(), 4);
        let e = estimate_lipschitz(&f, 1, &mut s, 50, &NormSpec::ell_2()).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(e.insufficient_sampling);
    }

    #[test]
    fn self_map_examples() {
        let f = MapFamily::new(
            "half",
            DomainSpec::ball(vec![0.0], 1.0, NormKind::Ell2).unwrap(),
            NormSpec::ell_2(),
            0.5,
            |x, _| Ok(vec![0.5 * x[0]]),
        )
        .unwrap();
        let mut s = DomainSampler::new(f.domain().clone(), 5);
        assert!(verify_self_map(&f, 1, &mut s, 1000).unwrap().holds);

        let g = MapFamily::new(
            "shift",
            DomainSpec::boxed(vec![0.0], vec![1.0]).unwrap(),
            NormSpec::ell_2(),
            0.5,
            |x, _| Ok(vec![x[0] + 1.0]),
        )
        .unwrap();
        let mut s = DomainSampler::new(g.domain().clone(), 6);
        let r = verify_self_map(&g, 1, &mut s, 10).unwrap();
        assert!(!r.holds);
        let x = r.counterexample.unwrap();
        assert!(!g.domain().contains(&g.evaluate(&x, 1).unwrap()));
        assert!(!g.domain().contains(&g.evaluate(&[0.5], 1).unwrap()));
    }
}
