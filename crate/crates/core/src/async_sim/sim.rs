//! The asynchronous block iteration with stale neighbor copies.

use serde::{Deserialize, Serialize};

use super::channel::{ChannelModel, ChannelRuntime};
use super::graph::{DependencyGraph, ReadPath};
use super::inexact::InexactMapFamily;
use super::stats::{realized_delay_stats, ChannelLog, DelayStats};
use crate::error::{check_len, Error, Result};
use crate::solver::{compute_fixed_point_series, FixedPointSeries, SolverOptions};
use crate::tracker::{tracking_error, TrackingTrace};

/// Iterate history and channel log of a run in progress.
///
/// The whole history is kept: a stale copy with stamp `s` is exactly the
/// block of `x^(s)`.
#[derive(Clone, Debug)]
pub struct AsyncState {
    history: Vec<Vec<f64>>,
    log: ChannelLog,
    paths_by_reader: Vec<Vec<ReadPath>>,
}

impl AsyncState {
    pub fn new(x0: &[f64], graph: &DependencyGraph) -> Result<Self> {
        check_len(graph.dim(), x0.len())?;
        let log = ChannelLog::new(graph);
        let mut paths_by_reader = vec![Vec::new(); graph.n_agents()];
        for p in &log.paths {
            paths_by_reader[p.reader].push(*p);
        }
        Ok(Self {
            history: vec![x0.to_vec()],
            log,
            paths_by_reader,
        })
    }

    /// The current tick `t`; `current()` is `x^(t)`.
    pub fn t(&self) -> usize {
        self.history.len()
    }

    pub fn current(&self) -> &[f64] {
        self.history.last().expect("history is never empty")
    }

    pub fn history(&self) -> &[Vec<f64>] {
        &self.history
    }

    pub fn log(&self) -> &ChannelLog {
        &self.log
    }

    /// The point agent `i` evaluates at tick `t`: its own block fresh,
    /// readable blocks at their delivered stamps, unreadable blocks at `x^(1)`.
    pub fn local_view(&self, graph: &DependencyGraph, agent: usize) -> Vec<f64> {
        let t = self.t();
        let blocks = graph.blocks();
        let mut z = self.history[0].clone();
        let own = blocks.range(agent);
        z[own.clone()].copy_from_slice(&self.history[t - 1][own]);
        for p in &self.paths_by_reader[agent] {
            let s = self.log.path_stamp(p, t);
            let r = blocks.range(p.block);
            z[r.clone()].copy_from_slice(&self.history[s - 1][r]);
        }
        z
    }
}

/// One tick: channels deliver stamps for tick `t`, then every computing agent
/// evaluates `f̃^(t)` at its local view and keeps its own block.
pub fn step_async(
    state: &mut AsyncState,
    map: &InexactMapFamily,
    graph: &DependencyGraph,
    channels: &mut ChannelRuntime,
) -> Result<()> {
    let t = state.t();
    let stamps = channels.advance(t)?;
    state.log.stamps.push(stamps);
    state.log.drops = channels.drops();
    let blocks = graph.blocks();
    let mut next = vec![0.0; graph.dim()];
    for i in graph.computing_agents() {
        let z = state.local_view(graph, i);
        let out = map.evaluate(&z, t)?;
        let r = blocks.range(i);
        next[r.clone()].copy_from_slice(&out[r]);
    }
    if !map.base().domain().contains(&next) {
        return Err(Error::DomainViolation {
            t: t + 1,
            detail: format!("asynchronous iterate left the domain of '{}'", map.base().name()),
        });
    }
    state.history.push(next);
    Ok(())
}

/// Result of an asynchronous run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsyncRun {
    pub trace: TrackingTrace,
    pub stats: DelayStats,
    pub log: ChannelLog,
}

/// Runs `horizon` ticks and compares against independently computed
/// reference points.
pub fn run_async_tracker(
    map: &InexactMapFamily,
    graph: &DependencyGraph,
    channels: &ChannelModel,
    x0: &[f64],
    horizon: usize,
) -> Result<AsyncRun> {
    let base = map.base();
    let reference = compute_fixed_point_series(base, horizon, base.norm(), SolverOptions::default())?;
    run_async_tracker_with_reference(map, graph, channels, x0, reference)
}

/// As [`run_async_tracker`] with a precomputed reference series.
pub fn run_async_tracker_with_reference(
    map: &InexactMapFamily,
    graph: &DependencyGraph,
    channels: &ChannelModel,
    x0: &[f64],
    reference: FixedPointSeries,
) -> Result<AsyncRun> {
    let horizon = reference.horizon();
    let base = map.base();
    check_len(base.dim(), graph.dim())?;
    if !base.domain().contains(x0) {
        return Err(Error::DomainViolation {
            t: 1,
            detail: "initial point is outside the domain".into(),
        });
    }
    let mut runtime = ChannelRuntime::new(channels, graph)?;
    let mut state = AsyncState::new(x0, graph)?;
    while state.t() < horizon {
        step_async(&mut state, map, graph, &mut runtime)?;
    }
    let AsyncState { history, mut log, .. } = state;
    // stats cover the ticks at which a map was applied plus the final one
    log.stamps.push(runtime.advance(horizon)?);
    log.drops = runtime.drops();
    let stats = realized_delay_stats(&log);
    let norm = base.norm().clone();
    let errors = tracking_error(&history, &reference, &norm)?;
    let trace = TrackingTrace {
        iterates: history,
        reference,
        errors,
        norm,
        seed: Some(channels.seed),
        e_f_series: (1..horizon).map(|t| map.e_f_bound(t)).collect(),
        lipschitz_series: (1..horizon).map(|t| base.lipschitz(t)).collect(),
        delay: Some(stats.clone()),
    };
    Ok(AsyncRun { trace, stats, log })
}
