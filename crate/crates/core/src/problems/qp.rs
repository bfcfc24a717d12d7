//! Regularized projected gradient on a time-varying box-constrained
//! quadratic program, exact and with measured output feedback.
//!
//! The problem at time `t` is
//! `min_{x ∈ box} Σ_i (a_i/2) x_i² + (γ/2)(cᵀx + w^(t) - r^(t))² + (η/2)‖x‖²`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::async_sim::{DependencyGraph, InexactMapFamily, PerturbationMode};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::map::MapFamily;
use crate::norm::NormSpec;
use crate::rng::stream;

/// A scalar exogenous signal indexed by time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    Constant {
        value: f64,
    },
    Linear {
        start: f64,
        slope: f64,
    },
    Sine {
        offset: f64,
        amplitude: f64,
        period: f64,
    },
    /// `values[t-1]`, holding the last value afterwards.
    Series {
        values: Vec<f64>,
    },
}

impl Signal {
    pub fn value(&self, t: usize) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Linear { start, slope } => start + slope * (t as f64 - 1.0),
            Self::Sine {
                offset,
                amplitude,
                period,
            } => offset + amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin(),
            Self::Series { values } => values.get(t - 1).or(values.last()).copied().unwrap_or(0.0),
        }
    }

    /// Multiplies the signal's variation (not its level) by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        match self.clone() {
            Self::Constant { value } => Self::Constant { value },
            Self::Linear { start, slope } => Self::Linear {
                start,
                slope: slope * scale,
            },
            Self::Sine {
                offset,
                amplitude,
                period,
            } => Self::Sine {
                offset,
                amplitude: amplitude * scale,
                period,
            },
            Self::Series { values } => {
                let base = values.first().copied().unwrap_or(0.0);
                Self::Series {
                    values: values.iter().map(|v| base + scale * (v - base)).collect(),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeVaryingQp {
    /// Cost curvatures `a_i > 0`.
    pub a: Vec<f64>,
    /// Coupling vector of the measured output `y = cᵀx + w`.
    pub c: Vec<f64>,
    pub gamma: f64,
    pub eta: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub w: Signal,
    pub r: Signal,
}

impl TimeVaryingQp {
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidInput("QP needs at least one variable".into()));
        }
        for len in [self.c.len(), self.lo.len(), self.hi.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if self.a.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidInput("cost curvatures a_i must be positive".into()));
        }
        if !(self.gamma > 0.0) || !(self.eta >= 0.0) {
            return Err(Error::InvalidInput("need gamma > 0 and eta >= 0".into()));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidInput("box bounds must satisfy lo < hi strictly".into()));
        }
        Ok(())
    }

    /// Largest eigenvalue of `diag(a) + γ c cᵀ`.
    pub fn smoothness(&self) -> f64 {
        self.hessian_eigen().0
    }

    /// Largest and smallest eigenvalues of `diag(a) + γ c cᵀ`.
    pub fn hessian_eigen(&self) -> (f64, f64) {
        let n = self.n();
        let h = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { self.a[i] } else { 0.0 };
            d + self.gamma * self.c[i] * self.c[j]
        });
        let ev = SymmetricEigen::new(h).eigenvalues;
        (ev.max(), ev.min())
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        DomainSpec::boxed(self.lo.clone(), self.hi.clone())
    }

    /// Gradient of the time-`t` objective with the output `y` supplied.
    fn gradient_with_output(&self, x: &[f64], y: f64, t: usize) -> Vec<f64> {
        let mismatch = self.gamma * (y - self.r.value(t));
        x.iter()
            .enumerate()
            .map(|(i, xi)| self.a[i] * xi + self.c[i] * mismatch + self.eta * xi)
            .collect()
    }

    pub fn output(&self, x: &[f64], t: usize) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.w.value(t)
    }

    pub fn gradient(&self, x: &[f64], t: usize) -> Vec<f64> {
        self.gradient_with_output(x, self.output(x, t), t)
    }

    fn step(&self, x: &[f64], y: f64, t: usize, alpha: f64) -> Vec<f64> {
        let g = self.gradient_with_output(x, y, t);
        x.iter()
            .zip(&g)
            .enumerate()
            .map(|(i, (xi, gi))| (xi - alpha * gi).clamp(self.lo[i], self.hi[i]))
            .collect()
    }

    /// `‖x - Proj(x - ∇F^(t)(x))‖₂`: zero exactly at the time-`t` minimizer.
    pub fn projected_gradient_residual(&self, x: &[f64], t: usize) -> f64 {
        let g = self.gradient(x, t);
        x.iter()
            .zip(&g)
            .enumerate()
            .map(|(i, (xi, gi))| {
                let p = (xi - gi).clamp(self.lo[i], self.hi[i]);
                (xi - p) * (xi - p)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// A seeded instance with `n` devices.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = stream(seed, &[0x5150_494e]);
        let a = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let c = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let gamma = rng.random_range(0.5..2.0);
        let eta = rng.random_range(0.01..3.0);
        let lo = vec![-1.0; n];
        let hi = vec![1.0; n];
        let w = Signal::Sine {
            offset: rng.random_range(-0.5..0.5),
            amplitude: rng.random_range(0.05..0.3),
            period: rng.random_range(50.0..200.0),
        };
        let r = Signal::Constant {
            value: rng.random_range(-0.5..0.5),
        };
        Self {
            a,
            c,
            gamma,
            eta,
            lo,
            hi,
            w,
            r,
        }
    }
}

/// `max{|1 - α(η + min a)|, |1 - α(M + η)|}` with `M` the largest Hessian
/// eigenvalue of the unregularized objective.
pub fn gradient_map_lipschitz(qp: &TimeVaryingQp, alpha: f64) -> f64 {
    let m = qp.smoothness();
    let min_a = qp.a.iter().copied().fold(f64::INFINITY, f64::min);
    (1.0 - alpha * (qp.eta + min_a))
        .abs()
        .max((1.0 - alpha * (m + qp.eta)).abs())
}

/// `x ↦ Proj_box{x - α(diag(a)x + γc(cᵀx + w^(t) - r^(t)) + ηx)}` in ℓ2.
pub fn build_gradient_map(qp: &TimeVaryingQp, alpha: f64) -> Result<MapFamily> {
    qp.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::PreconditionFailed(format!(
            "step size {alpha} is not in (0, inf)"
        )));
    }
    let l = gradient_map_lipschitz(qp, alpha);
    let q = qp.clone();
    MapFamily::new("qp-gradient", qp.domain()?, NormSpec::ell_2(), l, move |x, t| {
        Ok(q.step(x, q.output(x, t), t, alpha))
    })
}

/// Measurement noise on the output `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementNoise {
    pub bound: f64,
    #[serde(default)]
    pub mode: PerturbationMode,
    #[serde(default)]
    pub seed: u64,
}

impl MeasurementNoise {
    pub fn uniform(bound: f64, seed: u64) -> Self {
        Self {
            bound,
            mode: PerturbationMode::Uniform,
            seed,
        }
    }

    /// The noise `ν^(t)`, a function of `(seed, t)` only.
    pub fn sample(&self, t: usize, tag: u64) -> f64 {
        match self.mode {
            PerturbationMode::Constant => self.bound,
            PerturbationMode::Uniform => {
                if self.bound == 0.0 {
                    return 0.0;
                }
                let mut rng = stream(self.seed, &[0x4e4f_4953, tag, t as u64]);
                rng.random_range(-self.bound..=self.bound)
            }
        }
    }
}

/// The feedback map: the model output `cᵀx + w^(t)` is replaced by the
/// measurement `ŷ^(t) = y^(t)(x) + ν^(t)` with `|ν^(t)| <= noise.bound`.
///
/// Projection is nonexpansive, so `e_f = α γ ‖c‖₂ · noise.bound`.
pub fn build_feedback_gradient_map(
    qp: &TimeVaryingQp,
    alpha: f64,
    noise: MeasurementNoise,
) -> Result<InexactMapFamily> {
    let base = build_gradient_map(qp, alpha)?;
    if !(noise.bound >= 0.0 && noise.bound.is_finite()) {
        return Err(Error::InvalidInput("noise bound must be >= 0".into()));
    }
    if noise.bound == 0.0 {
        return Ok(InexactMapFamily::exact(base));
    }
    let c_norm = qp.c.iter().map(|c| c * c).sum::<f64>().sqrt();
    let e_f = alpha * qp.gamma * c_norm * noise.bound;
    let q = qp.clone();
    Ok(InexactMapFamily::from_evaluator(
        base,
        move |x, t| {
            let y_hat = q.output(x, t) + noise.sample(t, 0);
            Ok(q.step(x, y_hat, t, alpha))
        },
        e_f,
        move |_| e_f,
    ))
}

/// Scalar agents `0..N` exchanging through an aggregator `N` with an empty
/// block: edges `i -> N` and `N -> i` for every agent.
pub fn star_partition(qp: &TimeVaryingQp) -> Result<DependencyGraph> {
    let n = qp.n();
    let mut sizes = vec![1; n];
    sizes.push(0);
    DependencyGraph::new(sizes, (0..n).flat_map(|i| [(i, n), (n, i)]))
}
