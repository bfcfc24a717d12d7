//! Distributed asynchronous execution: inexact maps, dependency graphs,
//! delay/drop channels and realized delay statistics.

mod channel;
mod graph;
mod inexact;
mod sim;
mod stats;

pub use channel::{
    ChannelModel, ChannelPolicy, ChannelRuntime, ScheduleEntry, ScheduleTable, DEFAULT_MAX_CONSECUTIVE_DROPS,
};
pub use graph::{audit_dependency_graph, DependencyAudit, DependencyGraph, ReadPath, Route};
pub use inexact::{InexactMapFamily, Perturbation, PerturbationMode};
pub use sim::{run_async_tracker, run_async_tracker_with_reference, step_async, AsyncRun, AsyncState};
pub use stats::{realized_delay_stats, ChannelLog, DelayStats};
