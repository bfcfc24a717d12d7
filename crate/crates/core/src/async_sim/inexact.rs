//! Approximate maps `f̃^(t)` with a uniform deviation bound `e_f^(t)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::unit_ball_ell2;
use crate::error::{Error, Result};
use crate::map::{Evaluator, MapFamily, TimeSeriesFn};
use crate::norm::{NormKind, NormSpec};
use crate::rng::stream;

/// How an additive perturbation is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    /// Uniform on the norm ball of radius `e_f`, redrawn every time step.
    #[default]
    Uniform,
    /// The same offset of norm exactly `e_f` at every step; makes the
    /// asymptotic bounds nearly tight.
    Constant,
}

/// Additive perturbation `p^(t)` with `‖p^(t)‖ <= radius`, seeded per time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub radius: f64,
    #[serde(default)]
    pub mode: PerturbationMode,
    #[serde(default)]
    pub seed: u64,
}

impl Perturbation {
    pub fn uniform(radius: f64, seed: u64) -> Self {
        Self {
            radius,
            mode: PerturbationMode::Uniform,
            seed,
        }
    }

    pub fn constant(radius: f64) -> Self {
        Self {
            radius,
            mode: PerturbationMode::Constant,
            seed: 0,
        }
    }

    /// The realization `p^(t)` in dimension `dim` under `norm`.
    pub fn realize(&self, t: usize, dim: usize, norm: &NormSpec) -> Vec<f64> {
        let scales = norm.coordinate_scales(dim);
        match (self.mode, norm.kind) {
            (PerturbationMode::Constant, NormKind::EllInf) => scales.iter().map(|s| self.radius * s).collect(),
            (PerturbationMode::Constant, NormKind::Ell2) => {
                vec![self.radius / (dim as f64).sqrt(); dim]
            }
            (PerturbationMode::Uniform, NormKind::EllInf) => {
                let mut rng = stream(self.seed, &[0x5045_5254, t as u64]);
                scales
                    .iter()
                    .map(|s| self.radius * s * rng.random_range(-1.0..=1.0))
                    .collect()
            }
            (PerturbationMode::Uniform, NormKind::Ell2) => {
                let mut rng = stream(self.seed, &[0x5045_5254, t as u64]);
                unit_ball_ell2(&mut rng, dim)
                    .into_iter()
                    .map(|v| self.radius * v)
                    .collect()
            }
        }
    }
}

#[derive(Clone)]
enum Realization {
    Exact,
    Additive(Perturbation),
    Custom(Evaluator),
}

/// An exact family together with the approximation actually evaluated.
///
/// Outputs always lie in the base domain: additive perturbations are projected
/// back onto it, custom evaluators must guarantee it themselves.
#[derive(Clone)]
pub struct InexactMapFamily {
    base: MapFamily,
    realization: Realization,
    e_f_bound: TimeSeriesFn,
    e_f_sup: f64,
}

impl fmt::Debug for InexactMapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.realization {
            Realization::Exact => "exact".to_string(),
            Realization::Additive(p) => format!("{:?}", p),
            Realization::Custom(_) => "custom".to_string(),
        };
        f.debug_struct("InexactMapFamily")
            .field("base", &self.base)
            .field("realization", &kind)
            .field("e_f_sup", &self.e_f_sup)
            .finish()
    }
}

impl InexactMapFamily {
    /// `f̃ = f`, `e_f = 0`.
    pub fn exact(base: MapFamily) -> Self {
        Self {
            base,
            realization: Realization::Exact,
            e_f_bound: Arc::new(|_| 0.0),
            e_f_sup: 0.0,
        }
    }

    /// `f̃^(t)(x) = Proj_D(f^(t)(x) + p^(t))`.
    pub fn with_perturbation(base: MapFamily, perturbation: Perturbation) -> Result<Self> {
        if !(perturbation.radius >= 0.0 && perturbation.radius.is_finite()) {
            return Err(Error::InvalidInput("perturbation radius must be >= 0".into()));
        }
        if perturbation.radius == 0.0 {
            return Ok(Self::exact(base));
        }
        let r = perturbation.radius;
        Ok(Self {
            base,
            realization: Realization::Additive(perturbation),
            e_f_bound: Arc::new(move |_| r),
            e_f_sup: r,
        })
    }

    /// Wraps an arbitrary approximate evaluator whose deviation from the base
    /// family is bounded by `e_f_bound(t) <= e_f_sup`.
    pub fn from_evaluator<F, E>(base: MapFamily, evaluator: F, e_f_sup: f64, e_f_bound: E) -> Self
    where
        F: Fn(&[f64], usize) -> Result<Vec<f64>> + Send + Sync + 'static,
        E: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            base,
            realization: Realization::Custom(Arc::new(evaluator)),
            e_f_bound: Arc::new(e_f_bound),
            e_f_sup,
        }
    }

    pub fn base(&self) -> &MapFamily {
        &self.base
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.realization, Realization::Exact)
    }

    pub fn e_f_bound(&self, t: usize) -> f64 {
        (self.e_f_bound)(t)
    }

    pub fn e_f_sup(&self) -> f64 {
        self.e_f_sup
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `f̃^(t)(x)`.
    pub fn evaluate(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        match &self.realization {
            Realization::Exact => self.base.evaluate(x, t),
            Realization::Additive(p) => {
                let fx = self.base.evaluate(x, t)?;
                let offset = p.realize(t, fx.len(), self.base.norm());
                let shifted: Vec<f64> = fx.iter().zip(&offset).map(|(a, b)| a + b).collect();
                Ok(self.base.domain().project(&shifted))
            }
            Realization::Custom(eval) => {
                if x.len() != self.dim() {
                    return Err(Error::LengthMismatch {
                        expected: self.dim(),
                        found: x.len(),
                    });
                }
                eval(x, t)
            }
        }
    }
}
