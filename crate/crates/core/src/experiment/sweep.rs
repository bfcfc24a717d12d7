//! One-parameter sweeps over an experiment configuration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{ChannelConfig, ExperimentConfig, Mode, ProblemConfig};
use super::report::{median, CertificateStatus, ExperimentReport};
use super::runner::run_experiment;
use crate::async_sim::DEFAULT_MAX_CONSECUTIVE_DROPS;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    DropProbability,
    Td,
    Alpha,
    NoiseBound,
    SigmaScale,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "drop_probability" | "drop" | "p" => Ok(Self::DropProbability),
            "t_d" | "td" => Ok(Self::Td),
            "alpha" => Ok(Self::Alpha),
            "noise_bound" | "noise" | "e_f" => Ok(Self::NoiseBound),
            "sigma_scale" | "sigma" => Ok(Self::SigmaScale),
            _ => Err(Error::Config(format!(
                "unknown sweep parameter '{s}' (expected drop_probability, t_d, alpha, noise_bound or sigma_scale)"
            ))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::DropProbability => "drop_probability",
            Self::Td => "t_d",
            Self::Alpha => "alpha",
            Self::NoiseBound => "noise_bound",
            Self::SigmaScale => "sigma_scale",
        };
        f.write_str(s)
    }
}

/// `cfg` with `param` set to `value`.
pub fn apply_param(cfg: &ExperimentConfig, param: SweepParam, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    let bad = |m: &str| Err(Error::Config(format!("cannot sweep {param} on this config: {m}")));
    match param {
        SweepParam::DropProbability => {
            if c.mode != Mode::Async {
                return bad("packet drops need mode async");
            }
            let cap = match c.channel {
                ChannelConfig::IidDrop {
                    max_consecutive_drops, ..
                } => max_consecutive_drops,
                _ => DEFAULT_MAX_CONSECUTIVE_DROPS,
            };
            c.channel = ChannelConfig::IidDrop {
                probability: value,
                max_consecutive_drops: cap,
            };
        }
        SweepParam::Td => {
            if c.mode != Mode::Async {
                return bad("delays need mode async");
            }
            if !(value >= 0.0 && value.fract() == 0.0) {
                return bad("t_d must be a nonnegative integer");
            }
            let t_d = value as usize;
            c.channel = match c.channel {
                ChannelConfig::FixedDelay { .. } => ChannelConfig::FixedDelay { delay: t_d },
                _ => ChannelConfig::Sawtooth { t_d },
            };
        }
        SweepParam::Alpha => match &mut c.problem {
            ProblemConfig::QpGradient { params, .. } => params.alpha = Some(value),
            _ => return bad("alpha applies to qp-gradient only"),
        },
        SweepParam::NoiseBound => match &mut c.problem {
            ProblemConfig::Affine { params, .. } => params.e_f = value,
            ProblemConfig::QpGradient { params, .. } => params.noise_bound = value,
            ProblemConfig::Loadflow { params, .. } => params.noise_bound = value,
        },
        SweepParam::SigmaScale => match &mut c.problem {
            ProblemConfig::Affine { params, .. } => params.drift = params.drift.scaled(value),
            ProblemConfig::QpGradient { params, .. } => params.sigma_scale = value,
            ProblemConfig::Loadflow { params, .. } => params.sigma_scale = value,
        },
    }
    if let Some(out) = &cfg.output {
        c.output = Some(out.join(format!("{param}={value}")));
    }
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub median_tail_error: f64,
    pub median_tail_error_inf: f64,
    /// Median over replicates of the headline asymptotic bound (NaN when no
    /// bound applies).
    pub median_bound: f64,
    pub certificates_passed: bool,
    /// Whether each certificate applied in every replicate.
    pub applicable: Vec<(String, bool)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_step_window: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    pub tail_error_nondecreasing: bool,
    pub tail_error_strictly_increasing: bool,
    /// The same ordering for the ℓ∞ tail error.
    pub tail_error_inf_strictly_increasing: bool,
    pub bound_strictly_increasing: bool,
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>14}  {:>22}  {:>22}  {:>22}  certificates",
            self.param.to_string(),
            "median tail error",
            "median ell_inf error",
            "median bound"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>14}  {:>22.12e}  {:>22.12e}  {:>22.12e}  {}{}",
                r.value,
                r.median_tail_error,
                r.median_tail_error_inf,
                r.median_bound,
                if r.certificates_passed { "pass" } else { "FAIL" },
                match r.in_step_window {
                    Some(true) => "  (in step window)",
                    Some(false) => "  (outside step window)",
                    None => "",
                }
            )?;
        }
        writeln!(f, "tail error nondecreasing: {}", self.tail_error_nondecreasing)?;
        writeln!(
            f,
            "tail error strictly increasing: {}",
            self.tail_error_strictly_increasing
        )?;
        writeln!(
            f,
            "ell_inf tail error strictly increasing: {}",
            self.tail_error_inf_strictly_increasing
        )?;
        write!(f, "bound strictly increasing: {}", self.bound_strictly_increasing)
    }
}

fn row(value: f64, report: &ExperimentReport) -> SweepRow {
    let bounds: Vec<f64> = report
        .runs
        .iter()
        .filter_map(|r| super::report::headline_bound(&r.bounds, r.mode, r.inputs.norm))
        .collect();
    let names: Vec<String> = report
        .runs
        .first()
        .map(|r| r.certificates.iter().map(|c| c.name.clone()).collect())
        .unwrap_or_default();
    let applicable = names
        .into_iter()
        .map(|n| {
            let all = report.runs.iter().all(|r| {
                r.certificate(&n)
                    .is_some_and(|c| c.status != CertificateStatus::NotApplicable)
            });
            (n, all)
        })
        .collect();
    let windows: Vec<bool> = report.runs.iter().filter_map(|r| r.in_step_window).collect();
    SweepRow {
        value,
        median_tail_error: report.median_tail_error,
        median_tail_error_inf: report.median_tail_error_inf,
        median_bound: if bounds.len() == report.runs.len() {
            median(&bounds)
        } else {
            f64::NAN
        },
        certificates_passed: report.certificates_passed,
        applicable,
        in_step_window: (!windows.is_empty()).then(|| windows.iter().all(|w| *w)),
    }
}

/// Runs `cfg` once per value and summarizes monotonicity of the medians.
pub fn sweep(
    cfg: &ExperimentConfig,
    base_dir: Option<&Path>,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let c = apply_param(cfg, param, v)?;
        let out = run_experiment(&c, base_dir)?;
        rows.push(row(v, &out.report));
    }
    let pairs = |f: &dyn Fn(&SweepRow, &SweepRow) -> bool| rows.windows(2).all(|w| f(&w[0], &w[1]));
    let report = SweepReport {
        param,
        tail_error_nondecreasing: pairs(&|a, b| b.median_tail_error >= a.median_tail_error),
        tail_error_strictly_increasing: pairs(&|a, b| b.median_tail_error > a.median_tail_error),
        tail_error_inf_strictly_increasing: pairs(&|a, b| b.median_tail_error_inf > a.median_tail_error_inf),
        bound_strictly_increasing: pairs(&|a, b| b.median_bound > a.median_bound),
        rows,
    };
    if let Some(out) = &cfg.output {
        let dir = match base_dir {
            Some(d) if out.is_relative() => d.join(out),
            _ => out.clone(),
        };
        super::report::write_atomic(&dir.join("sweep.json"), &serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(report)
}
