//! Configuration-driven experiments: instance construction, runs, bound
//! certificates, CSV traces and parameter sweeps.

mod config;
mod report;
mod runner;
mod sweep;

pub use config::{
    AffineConfig, ChannelConfig, Decomposition, ExperimentConfig, LoadflowConfig, Mode, NetworkSource, ProblemConfig,
    QpConfig, QpInstance,
};
pub use report::{
    headline_bound, median, verify_bounds, write_trace_csv, Certificate, CertificateStatus, ExperimentReport,
    RunReport, TailSummary, CERTIFICATE_SLACK, CSV_HEADER,
};
pub use runner::{
    audit_config, build_instance, replicate_seed, run_experiment, run_instance, run_replicate, tail_start,
    write_outputs, ConfigAudit, ExperimentOutcome, Instance, RunOutcome,
};
pub use sweep::{apply_param, sweep, SweepParam, SweepReport, SweepRow};
