//! Agents, blocks and the directed edges along which blocks are exchanged.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::audit::DomainSampler;
use crate::error::{Error, Result};
use crate::map::MapFamily;
use crate::norm::BlockLayout;

/// Directed dependency graph over agents owning contiguous blocks.
///
/// Edge `(j, i)` means agent `i` reads agent `j`'s block. Agents with an empty
/// block are relays: they compute nothing and forward the latest copies they
/// hold (a star aggregator is a relay reached from and reaching every agent).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    blocks: BlockLayout,
    edges: Vec<(usize, usize)>,
}

/// How agent `reader` obtains a copy of block `block`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Over edge index `edge` (into [`DependencyGraph::edges`]).
    Direct { edge: usize },
    /// Through the copy held by a relay: `first` carries the block into the
    /// relay, `second` carries the relay's copies to the reader.
    Relay { first: usize, second: usize },
}

/// A reader/block pair that the graph makes available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadPath {
    pub reader: usize,
    pub block: usize,
    pub route: Route,
}

impl DependencyGraph {
    pub fn new(block_sizes: Vec<usize>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = block_sizes.len();
        if n == 0 {
            return Err(Error::InvalidInput("graph needs at least one agent".into()));
        }
        let mut set = BTreeSet::new();
        for (j, i) in edges {
            if j >= n || i >= n {
                return Err(Error::IndexOutOfRange(format!("edge ({j}, {i}) with {n} agents")));
            }
            if j == i {
                return Err(Error::InvalidInput(format!("self-edge at agent {i}")));
            }
            set.insert((j, i));
        }
        Ok(Self {
            blocks: BlockLayout::new(block_sizes),
            edges: set.into_iter().collect(),
        })
    }

    /// `n` scalar agents, no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(vec![1; n], [])
    }

    /// `n` scalar agents with edges in both directions between neighbors.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(vec![1; n], (1..n).flat_map(|i| [(i - 1, i), (i, i - 1)]))
    }

    /// Chain over blocks of the given sizes.
    pub fn chain_blocks(block_sizes: Vec<usize>) -> Result<Self> {
        let n = block_sizes.len();
        Self::new(block_sizes, (1..n).flat_map(|i| [(i - 1, i), (i, i - 1)]))
    }

    /// Every ordered pair of distinct agents.
    pub fn complete(block_sizes: Vec<usize>) -> Result<Self> {
        let n = block_sizes.len();
        let edges: Vec<_> = (0..n)
            .flat_map(|j| (0..n).filter(move |i| *i != j).map(move |i| (j, i)))
            .collect();
        Self::new(block_sizes, edges)
    }

    pub fn n_agents(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &BlockLayout {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.total()
    }

    /// Sorted, deduplicated `(src, dst)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, src: usize, dst: usize) -> Option<usize> {
        self.edges.binary_search(&(src, dst)).ok()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edge_index(src, dst).is_some()
    }

    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == i).map(|e| e.0).collect()
    }

    pub fn max_in_degree(&self) -> usize {
        (0..self.n_agents())
            .map(|i| self.in_neighbors(i).len())
            .max()
            .unwrap_or(0)
    }

    pub fn is_relay(&self, agent: usize) -> bool {
        self.blocks.sizes()[agent] == 0
    }

    /// Agents that own a nonempty block.
    pub fn computing_agents(&self) -> Vec<usize> {
        (0..self.n_agents()).filter(|a| !self.is_relay(*a)).collect()
    }

    /// Every way a computing agent can read another computing agent's block;
    /// direct edges take precedence over relays.
    pub fn read_paths(&self) -> Vec<ReadPath> {
        let agents = self.computing_agents();
        let mut paths = Vec::new();
        for &i in &agents {
            for &j in &agents {
                if i == j {
                    continue;
                }
                if let Some(edge) = self.edge_index(j, i) {
                    paths.push(ReadPath {
                        reader: i,
                        block: j,
                        route: Route::Direct { edge },
                    });
                    continue;
                }
                let relay = (0..self.n_agents()).filter(|h| self.is_relay(*h)).find_map(|h| {
                    Some(Route::Relay {
                        first: self.edge_index(j, h)?,
                        second: self.edge_index(h, i)?,
                    })
                });
                if let Some(route) = relay {
                    paths.push(ReadPath {
                        reader: i,
                        block: j,
                        route,
                    });
                }
            }
        }
        paths
    }

    /// Whether `reader` has any path to `block` (itself included).
    pub fn can_read(&self, reader: usize, block: usize) -> bool {
        reader == block || self.read_paths().iter().any(|p| p.reader == reader && p.block == block)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependencyAudit {
    pub consistent: bool,
    /// `(j, i)` pairs where block `j` influenced block `i` without a path.
    pub violations: Vec<(usize, usize)>,
}

/// Finite-difference probing: replaces block `j` of a sampled point by the
/// same block of another sample and records which output blocks change.
pub fn audit_dependency_graph(
    map: &MapFamily,
    graph: &DependencyGraph,
    probe_count: usize,
    seed: u64,
) -> Result<DependencyAudit> {
    if graph.dim() != map.dim() {
        return Err(Error::LengthMismatch {
            expected: map.dim(),
            found: graph.dim(),
        });
    }
    let blocks = graph.blocks();
    let agents = graph.computing_agents();
    let allowed: BTreeSet<(usize, usize)> = graph.read_paths().iter().map(|p| (p.block, p.reader)).collect();
    let mut violations = BTreeSet::new();
    let mut sampler = DomainSampler::new(map.domain().clone(), seed);
    for k in 0..probe_count {
        let t = 1 + k % 7;
        let x = sampler.point();
        let fx = map.evaluate(&x, t)?;
        for &j in &agents {
            let other = sampler.point();
            let mut y = x.clone();
            let r = blocks.range(j);
            y[r.clone()].copy_from_slice(&other[r]);
            if !map.domain().contains(&y) {
                continue;
            }
            let fy = map.evaluate(&y, t)?;
            for &i in &agents {
                if i == j || allowed.contains(&(j, i)) {
                    continue;
                }
                let changed = blocks
                    .range(i)
                    .any(|c| (fx[c] - fy[c]).abs() > 1e-13 * (1.0 + fx[c].abs()));
                if changed {
                    violations.insert((j, i));
                }
            }
        }
    }
    Ok(DependencyAudit {
        consistent: violations.is_empty(),
        violations: violations.into_iter().collect(),
    })
}
