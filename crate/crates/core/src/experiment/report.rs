//! Per-run reports, bound certificates and CSV traces.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Mode;
use crate::async_sim::DelayStats;
use crate::audit::AuditSummary;
use crate::bounds::{BoundInputs, BoundTable, BoundValue};
use crate::error::Result;
use crate::norm::NormKind;
use crate::tracker::TrackingTrace;

/// Slack added to every bound before comparing.
pub const CERTIFICATE_SLACK: f64 = 1e-9;

pub const CSV_HEADER: [&str; 6] = [
    "t",
    "error",
    "per_iterate_bound",
    "asymptotic_bound",
    "realized_Td_so_far",
    "realized_Nd_so_far",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `per_iterate`, `sync`, `async_inf`, `async_l2_equiv` or `async_l2_refined`.
    pub name: String,
    pub status: CertificateStatus,
    pub bound: Option<f64>,
    pub observed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Certificate {
    fn not_applicable(name: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CertificateStatus::NotApplicable,
            bound: None,
            observed: None,
            detail: Some(reason.into()),
        }
    }

    fn compare(name: &str, bound: &BoundValue, observed: f64) -> Self {
        match bound {
            BoundValue::Value { value } => Self {
                name: name.into(),
                status: if observed <= value + CERTIFICATE_SLACK {
                    CertificateStatus::Pass
                } else {
                    CertificateStatus::Fail
                },
                bound: Some(*value),
                observed: Some(observed),
                detail: None,
            },
            BoundValue::NotApplicable { reason } => Self::not_applicable(name, reason.clone()),
        }
    }
}

/// What the certificates are checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    /// Ticks `t > tail_start` form the tail window.
    pub tail_start: usize,
    /// Tail maximum of the error in the run's norm.
    pub tail_max: f64,
    /// Tail maximum of the ℓ∞ error (what the norm-equivalence bound covers).
    pub tail_max_inf: f64,
    /// `max_t (error_t - per_iterate_bound_t)` for synchronous runs.
    pub per_iterate_excess: Option<f64>,
}

/// Checks the tail against each bound that applies to the run.
///
/// `block_constants` says whether the family declares per-agent constants
/// with `Σ L_i² = L²`; without them the refined ℓ2 certificate is still
/// evaluated but carries a note.
pub fn verify_bounds(tail: &TailSummary, inputs: &BoundInputs, mode: Mode, block_constants: bool) -> Vec<Certificate> {
    let table = BoundTable::evaluate(inputs);
    let mut out = Vec::with_capacity(5);
    match (mode, tail.per_iterate_excess) {
        (Mode::Sync, Some(excess)) => out.push(Certificate {
            name: "per_iterate".into(),
            status: if excess <= CERTIFICATE_SLACK {
                CertificateStatus::Pass
            } else {
                CertificateStatus::Fail
            },
            bound: None,
            observed: Some(excess),
            detail: Some("largest error minus per-iterate bound over all ticks".into()),
        }),
        _ => out.push(Certificate::not_applicable("per_iterate", "asynchronous run")),
    }
    if mode == Mode::Sync {
        out.push(Certificate::compare("sync", &table.sync, tail.tail_max));
        for name in ["async_inf", "async_l2_equiv", "async_l2_refined"] {
            out.push(Certificate::not_applicable(name, "synchronous run"));
        }
        return out;
    }
    out.push(Certificate::not_applicable("sync", "asynchronous run"));
    match inputs.norm {
        NormKind::EllInf => {
            out.push(Certificate::compare("async_inf", &table.async_inf, tail.tail_max));
            out.push(Certificate::not_applicable("async_l2_equiv", "ell_inf run"));
            out.push(Certificate::not_applicable("async_l2_refined", "ell_inf run"));
        }
        NormKind::Ell2 => {
            out.push(Certificate::not_applicable("async_inf", "ell_2 run"));
            out.push(Certificate::compare(
                "async_l2_equiv",
                &table.async_l2_equiv,
                tail.tail_max_inf,
            ));
            let mut refined = Certificate::compare("async_l2_refined", &table.async_l2_refined, tail.tail_max);
            if !block_constants && refined.status != CertificateStatus::NotApplicable {
                refined.detail = Some("per-agent constants not declared; assumes Σ L_i² = L²".into());
            }
            out.push(refined);
        }
    }
    out
}

/// The headline asymptotic bound for a run's mode and norm, if any applies.
pub fn headline_bound(table: &BoundTable, mode: Mode, norm: NormKind) -> Option<f64> {
    match (mode, norm) {
        (Mode::Sync, _) => table.sync.value(),
        (Mode::Async, NormKind::EllInf) => table.async_inf.value(),
        (Mode::Async, NormKind::Ell2) => table.async_l2_refined.value().or(table.async_l2_equiv.value()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub replicate: usize,
    pub seed: u64,
    pub problem: String,
    pub mode: Mode,
    pub norm: String,
    pub horizon: usize,
    pub inputs: BoundInputs,
    pub bounds: BoundTable,
    pub delay: Option<DelayStats>,
    pub tail: TailSummary,
    pub final_error: f64,
    pub certificates: Vec<Certificate>,
    /// Whether the QP step size lies in the window for the realized `N_d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_step_window: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSummary>,
}

impl RunReport {
    pub fn certificates_passed(&self) -> bool {
        self.certificates.iter().all(|c| c.status != CertificateStatus::Fail)
    }

    pub fn certificate(&self, name: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub runs: Vec<RunReport>,
    pub median_tail_error: f64,
    /// Median of the ℓ∞ tail maxima; differs from `median_tail_error` for
    /// ℓ2 runs and weighted norms.
    pub median_tail_error_inf: f64,
    pub certificates_passed: bool,
    /// `None` when no audit was run.
    pub audit_passed: Option<bool>,
}

impl ExperimentReport {
    pub fn from_runs(runs: Vec<RunReport>) -> Self {
        let median_tail_error = median(&runs.iter().map(|r| r.tail.tail_max).collect::<Vec<_>>());
        let median_tail_error_inf = median(&runs.iter().map(|r| r.tail.tail_max_inf).collect::<Vec<_>>());
        let certificates_passed = runs.iter().all(RunReport::certificates_passed);
        let audits: Vec<bool> = runs
            .iter()
            .filter_map(|r| r.audit.as_ref().map(AuditSummary::passed))
            .collect();
        let audit_passed = (!audits.is_empty()).then(|| audits.iter().all(|a| *a));
        Self {
            runs,
            median_tail_error,
            median_tail_error_inf,
            certificates_passed,
            audit_passed,
        }
    }
}

/// Median; the mean of the two middle values for even lengths, NaN if empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Writes the trace CSV; floats carry 17 significant digits.
pub fn write_trace_csv<W: Write>(
    writer: W,
    trace: &TrackingTrace,
    per_iterate: Option<&[f64]>,
    asymptotic: Option<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    let fmt = |v: f64| format!("{v:.16e}");
    let asym = fmt(asymptotic.unwrap_or(f64::NAN));
    for (k, e) in trace.errors.iter().enumerate() {
        let pib = per_iterate.and_then(|p| p.get(k).copied()).unwrap_or(f64::NAN);
        let (td, nd) = match &trace.delay {
            Some(d) => (
                d.t_d_so_far.get(k).copied().unwrap_or(d.t_d),
                d.n_d_so_far.get(k).copied().unwrap_or(d.n_d),
            ),
            None => (0, 0),
        };
        w.write_record([
            (k + 1).to_string(),
            fmt(*e),
            fmt(pib),
            asym.clone(),
            td.to_string(),
            nd.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
