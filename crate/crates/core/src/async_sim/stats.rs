//! Channel logs and the realized delay statistics `T_d` and `N_d`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::channel::{ScheduleEntry, ScheduleTable};
use super::graph::{DependencyGraph, ReadPath, Route};
use crate::error::Result;

/// Per-tick edge stamps of one run together with the read paths they serve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelLog {
    pub edges: Vec<(usize, usize)>,
    pub paths: Vec<ReadPath>,
    /// `stamps[t - 1][e]` is the stamp of edge `e` at tick `t`.
    pub stamps: Vec<Vec<usize>>,
    pub drops: usize,
}

impl ChannelLog {
    pub fn new(graph: &DependencyGraph) -> Self {
        Self {
            edges: graph.edges().to_vec(),
            paths: graph.read_paths(),
            stamps: Vec::new(),
            drops: 0,
        }
    }

    pub fn ticks(&self) -> usize {
        self.stamps.len()
    }

    /// The tick whose value of `path.block` the reader uses at tick `t`.
    pub fn path_stamp(&self, path: &ReadPath, t: usize) -> usize {
        match path.route {
            Route::Direct { edge } => self.stamps[t - 1][edge],
            Route::Relay { first, second } => {
                let relayed = self.stamps[t - 1][second];
                self.stamps[relayed - 1][first]
            }
        }
    }

    /// The log as a schedule table; replaying it reproduces the run.
    pub fn to_schedule(&self) -> ScheduleTable {
        let mut entries = Vec::with_capacity(self.stamps.len() * self.edges.len());
        for (k, row) in self.stamps.iter().enumerate() {
            for (e, &(src, dst)) in self.edges.iter().enumerate() {
                entries.push(ScheduleEntry {
                    t: k + 1,
                    src,
                    dst,
                    delivered_stamp: row[e],
                });
            }
        }
        ScheduleTable { entries }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.to_schedule().write_csv(writer)
    }
}

/// Realized staleness of a run, measured on the values agents actually read.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    /// `max_{t,i,j} (t - D^(t)_{i,j})` over every read path.
    pub t_d: usize,
    /// `max_{t,i} #{j : D^(t)_{i,j} < t}`.
    pub n_d: usize,
    /// Largest staleness of a single edge; differs from `t_d` only when
    /// blocks travel through relays.
    pub edge_t_d: usize,
    pub drops: usize,
    pub ticks: usize,
    /// Running maxima of `t_d` per tick.
    #[serde(skip)]
    pub t_d_so_far: Vec<usize>,
    /// Running maxima of `n_d` per tick.
    #[serde(skip)]
    pub n_d_so_far: Vec<usize>,
}

/// Exact maxima over a finite log.
pub fn realized_delay_stats(log: &ChannelLog) -> DelayStats {
    let readers: Vec<usize> = {
        let mut r: Vec<usize> = log.paths.iter().map(|p| p.reader).collect();
        r.sort_unstable();
        r.dedup();
        r
    };
    let mut stats = DelayStats {
        drops: log.drops,
        ticks: log.ticks(),
        ..DelayStats::default()
    };
    let mut stale = vec![0usize; readers.iter().max().map_or(0, |m| m + 1)];
    for t in 1..=log.ticks() {
        for &d in &log.stamps[t - 1] {
            stats.edge_t_d = stats.edge_t_d.max(t - d.min(t));
        }
        stale.iter_mut().for_each(|c| *c = 0);
        for p in &log.paths {
            let d = log.path_stamp(p, t);
            let lag = t.saturating_sub(d);
            stats.t_d = stats.t_d.max(lag);
            if lag > 0 {
                stale[p.reader] += 1;
            }
        }
        stats.n_d = stats.n_d.max(stale.iter().copied().max().unwrap_or(0));
        stats.t_d_so_far.push(stats.t_d);
        stats.n_d_so_far.push(stats.n_d);
    }
    stats
}
