//! Vector norms used for contraction constants, drift and tracking errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[serde(alias = "inf", alias = "linf")]
    EllInf,
    #[serde(alias = "ell_2", alias = "l2", alias = "2")]
    Ell2,
}

/// Partition of a vector into contiguous blocks of sizes `m_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        Self { sizes, offsets }
    }

    /// `n` blocks of size one.
    pub fn scalar(n: usize) -> Self {
        Self::new(vec![1; n])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        self.offsets[block]..self.offsets[block] + self.sizes[block]
    }
}

/// The norm of an experiment.
///
/// For `EllInf` an optional block layout with positive weights `w_b` turns
/// the norm into the weighted block-maximum norm `max_b ‖x_b‖∞ / w_b`. Without
/// weights the block structure does not change the value (sub-vectors are
/// measured in ℓ∞ too, so the result is the flat ℓ∞ norm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl NormSpec {
    pub fn ell_inf() -> Self {
        Self {
            kind: NormKind::EllInf,
            blocks: None,
            weights: None,
        }
    }

    pub fn ell_2() -> Self {
        Self {
            kind: NormKind::Ell2,
            blocks: None,
            weights: None,
        }
    }

    pub fn of_kind(kind: NormKind) -> Self {
        match kind {
            NormKind::EllInf => Self::ell_inf(),
            NormKind::Ell2 => Self::ell_2(),
        }
    }

    pub fn with_blocks(mut self, blocks: BlockLayout) -> Self {
        self.blocks = Some(blocks);
        self
    }

    /// Weighted block-maximum ℓ∞ norm.
    pub fn weighted_block_max(blocks: BlockLayout, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != blocks.len() {
            return Err(Error::LengthMismatch {
                expected: blocks.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput("block weights must be positive".into()));
        }
        Ok(Self {
            kind: NormKind::EllInf,
            blocks: Some(blocks),
            weights: Some(weights),
        })
    }

    /// Checks internal consistency against a vector dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Some(blocks) = &self.blocks {
            if blocks.total() != dim {
                return Err(Error::InvalidInput(format!(
                    "block sizes sum to {} but dimension is {dim}",
                    blocks.total()
                )));
            }
        }
        if self.weights.is_some() {
            if self.kind != NormKind::EllInf {
                return Err(Error::InvalidInput(
                    "block weights are only supported for the ell_inf norm".into(),
                ));
            }
            if self.blocks.is_none() {
                return Err(Error::InvalidInput("block weights need a block layout".into()));
            }
        }
        Ok(())
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match (self.kind, &self.weights, &self.blocks) {
            (NormKind::EllInf, Some(w), Some(blocks)) => (0..blocks.len())
                .map(|b| v[blocks.range(b)].iter().fold(0.0f64, |m, x| m.max(x.abs())) / w[b])
                .fold(0.0, f64::max),
            (NormKind::EllInf, _, _) => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            (NormKind::Ell2, _, _) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&diff)
    }

    /// Per-coordinate scale of the unit ball: coordinate `k` of a vector in
    /// the unit ball is bounded by `coordinate_scale(k)` (weights for the
    /// weighted norm, one otherwise).
    pub fn coordinate_scales(&self, dim: usize) -> Vec<f64> {
        match (&self.weights, &self.blocks) {
            (Some(w), Some(blocks)) => {
                let mut out = vec![1.0; dim];
                for (b, wb) in w.iter().enumerate() {
                    out[blocks.range(b)].fill(*wb);
                }
                out
            }
            _ => vec![1.0; dim],
        }
    }
}

impl std::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.kind, self.is_weighted()) {
            (NormKind::EllInf, false) => write!(f, "ell_inf"),
            (NormKind::EllInf, true) => write!(f, "weighted block-max ell_inf"),
            (NormKind::Ell2, _) => write!(f, "ell_2"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_norms() {
        let v = [3.0, -4.0];
        assert_eq!(NormSpec::ell_inf().norm(&v), 4.0);
        assert_eq!(NormSpec::ell_2().norm(&v), 5.0);
    }

    #[test]
    fn unweighted_blocks_collapse_to_flat_inf() {
        let n = NormSpec::ell_inf().with_blocks(BlockLayout::new(vec![2, 1]));
        assert_eq!(n.norm(&[0.1, -0.7, 0.3]), 0.7);
    }

    #[test]
    fn weighted_block_max() {
        let n = NormSpec::weighted_block_max(BlockLayout::new(vec![1, 2]), vec![1.0, 4.0]).unwrap();
        assert_eq!(n.norm(&[0.5, 1.0, -3.0]), 0.75);
        assert!(n.validate(3).is_ok());
        assert!(n.validate(4).is_err());
    }

    #[test]
    fn weights_rejected_for_ell2() {
        let mut n = NormSpec::ell_2().with_blocks(BlockLayout::scalar(2));
        n.weights = Some(vec![1.0, 1.0]);
        assert!(n.validate(2).is_err());
    }
}
