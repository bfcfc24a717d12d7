//! Drift processes for designed fixed-point trajectories.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::NormSpec;
use crate::rng::stream;

/// How a designed fixed point moves from one tick to the next.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Constant,
    /// Moves by exactly `sigma` along a fixed direction every tick.
    Linear {
        sigma: f64,
    },
    /// Seeded steps uniform in the ball of radius `step`; precomputed for
    /// ticks up to `horizon`.
    RandomWalk {
        step: f64,
        horizon: usize,
    },
    /// Linear drift whose speed is multiplied by `factor` on ticks
    /// `fast_start..fast_end`.
    Piecewise {
        sigma: f64,
        fast_start: usize,
        fast_end: usize,
        factor: f64,
    },
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("drift: {what}")));
        match self {
            Self::Constant => Ok(()),
            Self::Linear { sigma } if !(*sigma >= 0.0 && sigma.is_finite()) => bad("sigma must be >= 0"),
            Self::RandomWalk { step, .. } if !(*step >= 0.0 && step.is_finite()) => bad("step must be >= 0"),
            Self::Piecewise { sigma, factor, .. } if !(*sigma >= 0.0 && *factor >= 0.0) => {
                bad("sigma and factor must be >= 0")
            }
            _ => Ok(()),
        }
    }

    /// Largest per-tick movement the process can make.
    pub fn sigma_sup(&self) -> f64 {
        match self {
            Self::Constant => 0.0,
            Self::Linear { sigma } => *sigma,
            Self::RandomWalk { step, .. } => *step,
            Self::Piecewise { sigma, factor, .. } => sigma * factor.max(1.0),
        }
    }

    /// The same process with every speed multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        match self.clone() {
            Self::Constant => Self::Constant,
            Self::Linear { sigma } => Self::Linear { sigma: sigma * scale },
            Self::RandomWalk { step, horizon } => Self::RandomWalk {
                step: step * scale,
                horizon,
            },
            Self::Piecewise {
                sigma,
                fast_start,
                fast_end,
                factor,
            } => Self::Piecewise {
                sigma: sigma * scale,
                fast_start,
                fast_end,
                factor,
            },
        }
    }
}

/// A realized trajectory `start + offset(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftPath {
    start: Vec<f64>,
    kind: PathKind,
}

#[derive(Clone, Debug, PartialEq)]
enum PathKind {
    Static,
    /// Position `s(t)·direction` with a piecewise-linear scalar `s`.
    Line {
        direction: Vec<f64>,
        sigma: f64,
        fast: Option<(usize, usize, f64)>,
    },
    /// Precomputed points for ticks `1..=len`.
    Table(Vec<Vec<f64>>),
}

impl DriftPath {
    /// Realizes `spec` from `start`; directions have unit length in `norm`.
    pub fn new(spec: &DriftSpec, start: Vec<f64>, norm: &NormSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let dim = start.len();
        let direction = || {
            let mut rng = stream(seed, &[0x4452_4946]);
            loop {
                let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = norm.norm(&u);
                if n > 1e-3 {
                    return u.into_iter().map(|v| v / n).collect::<Vec<f64>>();
                }
            }
        };
        let kind = match *spec {
            DriftSpec::Constant => PathKind::Static,
            DriftSpec::Linear { sigma } => PathKind::Line {
                direction: direction(),
                sigma,
                fast: None,
            },
            DriftSpec::Piecewise {
                sigma,
                fast_start,
                fast_end,
                factor,
            } => PathKind::Line {
                direction: direction(),
                sigma,
                fast: Some((fast_start, fast_end, factor)),
            },
            DriftSpec::RandomWalk { step, horizon } => {
                let mut rng = stream(seed, &[0x5257_414c]);
                let scales = norm.coordinate_scales(dim);
                let mut points = Vec::with_capacity(horizon.max(1));
                points.push(start.clone());
                while points.len() < horizon.max(1) {
                    // uniform in the unit ball of the norm, then scaled to the step
                    let v: Vec<f64> = match norm.kind {
                        crate::norm::NormKind::EllInf => {
                            scales.iter().map(|s| s * rng.random_range(-1.0..=1.0)).collect()
                        }
                        crate::norm::NormKind::Ell2 => crate::domain::unit_ball_ell2(&mut rng, dim),
                    };
                    let last = points.last().unwrap();
                    let next = last.iter().zip(&v).map(|(p, d)| p + step * d).collect();
                    points.push(next);
                }
                PathKind::Table(points)
            }
        };
        Ok(Self { start, kind })
    }

    /// Distance travelled along the line by tick `t`.
    fn arc(sigma: f64, fast: Option<(usize, usize, f64)>, t: usize) -> f64 {
        let steps = t.saturating_sub(1) as f64;
        match fast {
            None => sigma * steps,
            Some((a, b, factor)) => {
                // ticks k in 1..t contribute sigma, or sigma*factor when a <= k < b
                let fast_steps = t.min(b).saturating_sub(a.max(1)) as f64;
                sigma * (steps - fast_steps) + sigma * factor * fast_steps
            }
        }
    }

    /// The designed point at tick `t`.
    pub fn point(&self, t: usize) -> Result<Vec<f64>> {
        match &self.kind {
            PathKind::Static => Ok(self.start.clone()),
            PathKind::Line { direction, sigma, fast } => {
                let s = Self::arc(*sigma, *fast, t);
                Ok(self.start.iter().zip(direction).map(|(p, d)| p + s * d).collect())
            }
            PathKind::Table(points) => points.get(t - 1).cloned().ok_or_else(|| {
                Error::IndexOutOfRange(format!(
                    "random-walk drift was realized for {} ticks, t = {t} requested",
                    points.len()
                ))
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_moves_exactly_sigma() {
        let n = NormSpec::ell_2();
        let p = DriftPath::new(&DriftSpec::Linear { sigma: 0.05 }, vec![0.0; 4], &n, 1).unwrap();
        for t in 1..50 {
            let d = n.dist(&p.point(t + 1).unwrap(), &p.point(t).unwrap());
            assert!((d - 0.05).abs() < 1e-14);
        }
    }

    #[test]
    fn piecewise_speeds_up_on_segment() {
        let n = NormSpec::ell_inf();
        let spec = DriftSpec::Piecewise {
            sigma: 0.01,
            fast_start: 5,
            fast_end: 8,
            factor: 10.0,
        };
        let p = DriftPath::new(&spec, vec![0.0; 3], &n, 2).unwrap();
        let steps: Vec<f64> = (1..12)
            .map(|t| n.dist(&p.point(t + 1).unwrap(), &p.point(t).unwrap()))
            .collect();
        for (k, s) in steps.iter().enumerate() {
            let t = k + 1;
            let want = if (5..8).contains(&t) { 0.1 } else { 0.01 };
            assert!((s - want).abs() < 1e-12, "t={t}: {s}");
        }
    }

    #[test]
    fn random_walk_steps_bounded() {
        for n in [NormSpec::ell_2(), NormSpec::ell_inf()] {
            let p = DriftPath::new(
                &DriftSpec::RandomWalk {
                    step: 0.02,
                    horizon: 100,
                },
                vec![1.0; 3],
                &n,
                3,
            )
            .unwrap();
            for t in 1..100 {
                assert!(n.dist(&p.point(t + 1).unwrap(), &p.point(t).unwrap()) <= 0.02 + 1e-15);
            }
            assert!(p.point(101).is_err());
        }
    }
}
