//! Affine oracle family `x ↦ A x + b^(t)` with a designed fixed-point path.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::drift::{DriftPath, DriftSpec};
use crate::async_sim::DependencyGraph;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::map::MapFamily;
use crate::norm::{NormKind, NormSpec};
use crate::rng::stream;

/// Coupling pattern of the random matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Every entry nonzero; complete dependency graph.
    #[default]
    Dense,
    /// Tridiagonal; chain dependency graph.
    Chain,
    /// Diagonal; no edges.
    Diagonal,
}

/// How an ℓ2 family is scaled to its target constant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ell2Scaling {
    /// Spectral norm equals the target: the tight ℓ2 constant.
    #[default]
    Spectral,
    /// Frobenius norm equals the target. The declared constant is then an
    /// upper bound on the spectral norm, and the row norms `L_i` satisfy
    /// `Σ L_i² = L²` as the refined asynchronous ℓ2 analysis requires.
    Frobenius,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineParams {
    pub m: usize,
    pub target_l: f64,
    pub drift: DriftSpec,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub scaling: Ell2Scaling,
}

/// An affine family together with its matrix and designed fixed points.
#[derive(Clone, Debug)]
pub struct AffineFamily {
    matrix: DMatrix<f64>,
    graph: DependencyGraph,
    family: MapFamily,
}

impl AffineFamily {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    pub fn into_family(self) -> MapFamily {
        self.family
    }

    /// Scalar agents with edges following the coupling pattern.
    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }
}

fn coupling_mask(coupling: Coupling, i: usize, j: usize) -> bool {
    match coupling {
        Coupling::Dense => true,
        Coupling::Chain => i.abs_diff(j) <= 1,
        Coupling::Diagonal => i == j,
    }
}

/// ℓ∞ or ℓ2 induced norm of `a` (spectral for ℓ2).
pub fn induced_norm(a: &DMatrix<f64>, norm: NormKind) -> f64 {
    match norm {
        NormKind::EllInf => a
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Ell2 => a.clone().singular_values().max(),
    }
}

/// Builds `x ↦ A x + b^(t)` with `A` drawn from `seed` and scaled to
/// `target_l`, and `b^(t) = (I - A) x^(*,t)` for a fixed-point path that
/// follows `drift`.
pub fn build_affine_family(
    m: usize,
    norm: NormKind,
    target_l: f64,
    drift: DriftSpec,
    seed: u64,
) -> Result<AffineFamily> {
    build_affine(
        &AffineParams {
            m,
            target_l,
            drift,
            coupling: Coupling::Dense,
            scaling: Ell2Scaling::Spectral,
        },
        norm,
        seed,
    )
}

pub fn build_affine(params: &AffineParams, norm: NormKind, seed: u64) -> Result<AffineFamily> {
    let m = params.m;
    let target = params.target_l;
    if m == 0 {
        return Err(Error::InvalidInput("affine family needs m >= 1".into()));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::PreconditionFailed(format!(
            "target L = {target} is not in (0, 1)"
        )));
    }
    let mut rng = stream(seed, &[0x4146_4649]);
    let mut a = DMatrix::from_fn(m, m, |i, j| {
        let v: f64 = rng.random_range(-1.0..1.0);
        if coupling_mask(params.coupling, i, j) {
            v
        } else {
            0.0
        }
    });
    for i in 0..m {
        // keep every row nonzero so row scaling is defined
        if a[(i, i)].abs() < 0.1 {
            a[(i, i)] = 0.1f64.copysign(a[(i, i)]);
        }
    }
    let mut block_l = None;
    match norm {
        NormKind::EllInf => {
            for mut row in a.row_iter_mut() {
                let s: f64 = row.iter().map(|v| v.abs()).sum();
                row *= target / s;
            }
        }
        NormKind::Ell2 => match params.scaling {
            Ell2Scaling::Spectral => {
                let s = a.clone().singular_values().max();
                a *= target / s;
            }
            Ell2Scaling::Frobenius => {
                let s = a.norm();
                a *= target / s;
                block_l = Some(a.row_iter().map(|r| r.norm()).collect::<Vec<f64>>());
            }
        },
    }

    let norm_spec = NormSpec::of_kind(norm);
    let start: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let path = Arc::new(DriftPath::new(&params.drift, start, &norm_spec, seed)?);
    let i_minus_a = DMatrix::identity(m, m) - &a;

    let a_eval = a.clone();
    let path_eval = Arc::clone(&path);
    let evaluator = move |x: &[f64], t: usize| -> Result<Vec<f64>> {
        let xs = DVector::from_vec(path_eval.point(t)?);
        let b = &i_minus_a * xs;
        let ax = &a_eval * DVector::from_column_slice(x);
        Ok((ax + b).iter().copied().collect())
    };
    let path_fp = Arc::clone(&path);
    let mut family = MapFamily::new(
        format!("affine-{}", norm_spec),
        DomainSpec::all_space(m)?,
        norm_spec,
        target,
        evaluator,
    )?
    .with_fixed_point(move |t| path_fp.point(t).unwrap_or_default());
    if let Some(bl) = block_l {
        family = family.with_block_lipschitz(bl)?;
    }
    let graph = match params.coupling {
        Coupling::Dense => DependencyGraph::complete(vec![1; m])?,
        Coupling::Chain => DependencyGraph::chain(m)?,
        Coupling::Diagonal => DependencyGraph::empty(m)?,
    };
    Ok(AffineFamily {
        matrix: a,
        graph,
        family,
    })
}
