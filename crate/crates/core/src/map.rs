//! Time-indexed families of contraction self-maps.

use std::fmt;
use std::sync::Arc;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::norm::NormSpec;

/// Evaluates `f^(t)(x)`. Time indices start at 1.
pub type Evaluator = Arc<dyn Fn(&[f64], usize) -> Result<Vec<f64>> + Send + Sync>;
/// A scalar series indexed by time.
pub type TimeSeriesFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;
/// A vector series indexed by time.
pub type PointFn = Arc<dyn Fn(usize) -> Vec<f64> + Send + Sync>;

/// A family `f^(t)` of self-maps of a closed domain, each a contraction in
/// `norm` with declared constant `L^(t) <= L_sup < 1`.
#[derive(Clone)]
pub struct MapFamily {
    name: String,
    domain: DomainSpec,
    norm: NormSpec,
    evaluator: Evaluator,
    lipschitz: TimeSeriesFn,
    lipschitz_sup: f64,
    block_lipschitz: Option<Vec<f64>>,
    fixed_point: Option<PointFn>,
}

impl fmt::Debug for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapFamily")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("norm", &self.norm)
            .field("lipschitz_sup", &self.lipschitz_sup)
            .finish_non_exhaustive()
    }
}

impl MapFamily {
    /// A family with a time-invariant declared constant `lipschitz`.
    ///
    /// `lipschitz` must lie in `[0, 1)`.
    pub fn new<F>(
        name: impl Into<String>,
        domain: DomainSpec,
        norm: NormSpec,
        lipschitz: f64,
        evaluator: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], usize) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        check_contraction(lipschitz)?;
        norm.validate(domain.dim())?;
        Ok(Self {
            name: name.into(),
            domain,
            norm,
            evaluator: Arc::new(evaluator),
            lipschitz: Arc::new(move |_| lipschitz),
            lipschitz_sup: lipschitz,
            block_lipschitz: None,
            fixed_point: None,
        })
    }

    /// Replaces the constant declaration with a per-time series bounded by
    /// `sup`.
    pub fn with_lipschitz_series<F>(mut self, sup: f64, series: F) -> Result<Self>
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        check_contraction(sup)?;
        self.lipschitz = Arc::new(series);
        self.lipschitz_sup = sup;
        Ok(self)
    }

    /// Overrides the declaration with a user-supplied constant. Per-agent
    /// constants are dropped since they no longer match.
    pub fn with_declared_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        check_contraction(lipschitz)?;
        self.lipschitz = Arc::new(move |_| lipschitz);
        self.lipschitz_sup = lipschitz;
        self.block_lipschitz = None;
        Ok(self)
    }

    /// Attaches a closed-form fixed point `t -> x^(*,t)`.
    pub fn with_fixed_point<F>(mut self, fixed_point: F) -> Self
    where
        F: Fn(usize) -> Vec<f64> + Send + Sync + 'static,
    {
        self.fixed_point = Some(Arc::new(fixed_point));
        self
    }

    /// Attaches per-agent constants `L_i`; under ℓ2 they must satisfy
    /// `Σ L_i² = L²`.
    pub fn with_block_lipschitz(mut self, block_l: Vec<f64>) -> Result<Self> {
        if self.norm.kind == crate::norm::NormKind::Ell2 {
            let sum_sq: f64 = block_l.iter().map(|l| l * l).sum();
            let target = self.lipschitz_sup * self.lipschitz_sup;
            if (sum_sq - target).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "sum of squared block constants {sum_sq} differs from L^2 = {target}"
                )));
            }
        }
        self.block_lipschitz = Some(block_l);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn lipschitz(&self, t: usize) -> f64 {
        (self.lipschitz)(t)
    }

    pub fn lipschitz_sup(&self) -> f64 {
        self.lipschitz_sup
    }

    pub fn block_lipschitz(&self) -> Option<&[f64]> {
        self.block_lipschitz.as_deref()
    }

    pub fn closed_form_fixed_point(&self, t: usize) -> Option<Vec<f64>> {
        self.fixed_point.as_ref().map(|f| f(t))
    }

    pub fn has_closed_form(&self) -> bool {
        self.fixed_point.is_some()
    }

    pub fn evaluate(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        (self.evaluator)(x, t)
    }

    /// Largest declared constant over `1..=horizon`.
    pub fn lipschitz_max_over(&self, horizon: usize) -> f64 {
        (1..=horizon.max(1)).map(|t| self.lipschitz(t)).fold(0.0, f64::max)
    }
}

fn check_contraction(l: f64) -> Result<()> {
    if (0.0..1.0).contains(&l) {
        Ok(())
    } else {
        Err(Error::PreconditionFailed(format!(
            "declared Lipschitz constant {l} is not in [0, 1)"
        )))
    }
}
