//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::async_sim::{
    ChannelModel, ChannelPolicy, DependencyGraph, PerturbationMode, ScheduleTable, DEFAULT_MAX_CONSECUTIVE_DROPS,
};
use crate::error::{Error, Result};
use crate::norm::NormKind;
use crate::problems::{
    Coupling, DriftSpec, Ell2Scaling, InjectionProfile, MultiAreaOptions, PowerNetwork, TimeVaryingQp,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub mode: Mode,
    /// Only the affine family lets the norm be chosen; the QP map is an ℓ2
    /// contraction and the load flow an ℓ∞ one.
    #[serde(default)]
    pub norm: Option<NormKind>,
    #[serde(default)]
    pub channel: ChannelConfig,
    pub horizon: usize,
    #[serde(default = "default_transient")]
    pub transient_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Sample count per audit time; 0 skips the audit.
    #[serde(default = "default_audit_samples")]
    pub audit_samples: usize,
    /// Output directory for traces and the JSON report.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_transient() -> f64 {
    0.1
}

fn default_replicates() -> usize {
    1
}

fn default_audit_samples() -> usize {
    500
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sync,
    Async,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    Affine {
        params: AffineConfig,
        #[serde(default)]
        instance_seed: u64,
    },
    QpGradient {
        params: QpConfig,
        #[serde(default)]
        instance_seed: u64,
    },
    Loadflow {
        params: LoadflowConfig,
        #[serde(default)]
        instance_seed: u64,
    },
}

impl ProblemConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Affine { .. } => "affine",
            Self::QpGradient { .. } => "qp-gradient",
            Self::Loadflow { .. } => "loadflow",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineConfig {
    pub m: usize,
    pub target_l: f64,
    pub drift: DriftSpec,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub scaling: Ell2Scaling,
    /// Radius of the additive perturbation, i.e. `e_f`.
    #[serde(default)]
    pub e_f: f64,
    #[serde(default)]
    pub perturbation_mode: PerturbationMode,
    /// Constant declared to the bounds and audits in place of `target_l`.
    /// A value below the true constant is caught by the audit.
    #[serde(default)]
    pub declared_l: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QpInstance {
    /// A seeded instance with `n` devices.
    Random {
        n: usize,
    },
    Explicit {
        qp: TimeVaryingQp,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpConfig {
    pub instance: QpInstance,
    /// Step size; defaults to `1/(M + η)`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub noise_bound: f64,
    #[serde(default)]
    pub noise_mode: PerturbationMode,
    /// Multiplies the variation of the exogenous signals.
    #[serde(default = "one")]
    pub sigma_scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSource {
    /// `"twelve_bus_three_area"`.
    Builtin(String),
    Path(PathBuf),
    Inline(PowerNetwork),
}

impl NetworkSource {
    pub fn load(&self, base_dir: Option<&Path>) -> Result<PowerNetwork> {
        match self {
            Self::Builtin(name) if name == "twelve_bus_three_area" => Ok(PowerNetwork::twelve_bus_three_area()),
            Self::Builtin(name) => Err(Error::Config(format!("unknown builtin network '{name}'"))),
            Self::Path(p) => {
                let p = match base_dir {
                    Some(d) if p.is_relative() => d.join(p),
                    _ => p.clone(),
                };
                PowerNetwork::from_path(p)
            }
            Self::Inline(net) => {
                net.validate()?;
                Ok(net.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decomposition {
    /// One map over all buses; in async mode every bus is an agent.
    Monolithic,
    /// One agent per area exchanging anchor voltages and measured flows.
    #[default]
    Areas,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadflowConfig {
    pub network: NetworkSource,
    #[serde(default)]
    pub profile: InjectionProfile,
    #[serde(default)]
    pub decomposition: Decomposition,
    /// Bound on the measurement error of each tie-line flow (areas only).
    #[serde(default)]
    pub noise_bound: f64,
    #[serde(default)]
    pub noise_mode: PerturbationMode,
    #[serde(default)]
    pub areas: Option<MultiAreaOptions>,
    #[serde(default = "one")]
    pub sigma_scale: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    #[default]
    Zero,
    FixedDelay {
        delay: usize,
    },
    IidDrop {
        probability: f64,
        #[serde(default = "default_cap")]
        max_consecutive_drops: usize,
    },
    /// Delay pattern `0, 1, ..., t_d` with a seeded phase per edge.
    Sawtooth {
        t_d: usize,
    },
    /// `delays` on edges `(j, i)` with `j < i`, `reverse_delays` (default
    /// `delays`) on the others.
    Periodic {
        delays: Vec<usize>,
        #[serde(default)]
        reverse_delays: Option<Vec<usize>>,
        #[serde(default)]
        phase: usize,
    },
    /// Delivered stamps from a `t,src,dst,delivered_stamp` CSV file.
    Schedule {
        path: PathBuf,
        #[serde(default)]
        cap: Option<usize>,
        #[serde(default)]
        allow_non_monotone: bool,
    },
}

fn default_cap() -> usize {
    DEFAULT_MAX_CONSECUTIVE_DROPS
}

impl ChannelConfig {
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || matches!(self, Self::FixedDelay { delay: 0 })
    }

    /// The channel model on `graph` with RNG seed `seed`.
    pub fn model(&self, graph: &DependencyGraph, seed: u64, base_dir: Option<&Path>) -> Result<ChannelModel> {
        let mut model = match self {
            Self::Zero => ChannelModel::zero(),
            Self::FixedDelay { delay } => ChannelModel::fixed_delay(*delay),
            Self::IidDrop {
                probability,
                max_consecutive_drops,
            } => ChannelModel::iid_drop(*probability, *max_consecutive_drops, seed),
            Self::Sawtooth { t_d } => ChannelModel::sawtooth(graph, *t_d, seed),
            Self::Periodic {
                delays,
                reverse_delays,
                phase,
            } => {
                let back = reverse_delays.clone().unwrap_or_else(|| delays.clone());
                ChannelModel::periodic_by_direction(graph, delays.clone(), back, *phase)
            }
            Self::Schedule {
                path,
                cap,
                allow_non_monotone,
            } => {
                let p = match base_dir {
                    Some(d) if path.is_relative() => d.join(path),
                    _ => path.clone(),
                };
                ChannelModel::from_schedule(&ScheduleTable::from_path(p)?, *cap, *allow_non_monotone)
            }
        };
        model.seed = seed;
        model.validate()?;
        Ok(model)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    /// Static checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.horizon < 2 {
            return bad("horizon must be at least 2".into());
        }
        if !(0.0..1.0).contains(&self.transient_fraction) {
            return bad("transient_fraction must lie in [0, 1)".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if self.mode == Mode::Sync && !self.channel.is_zero() {
            return bad("a synchronous run cannot use a delaying channel; set mode to async".into());
        }
        match (&self.problem, self.norm) {
            (ProblemConfig::QpGradient { .. }, Some(NormKind::EllInf)) => {
                return bad("the qp-gradient map is an ell_2 contraction".into())
            }
            (ProblemConfig::Loadflow { .. }, Some(NormKind::Ell2)) => {
                return bad("the load-flow map is an ell_inf contraction".into())
            }
            _ => {}
        }
        match &self.problem {
            ProblemConfig::Affine { params, .. } => {
                if params.m == 0 || !(params.target_l > 0.0 && params.target_l < 1.0) {
                    return bad("affine needs m >= 1 and target_l in (0, 1)".into());
                }
                if !(params.e_f >= 0.0) {
                    return bad("e_f must be >= 0".into());
                }
                params.drift.validate().map_err(|e| Error::Config(e.to_string()))?;
            }
            ProblemConfig::QpGradient { params, .. } => {
                if let QpInstance::Random { n: 0 } = params.instance {
                    return bad("qp instance needs n >= 1".into());
                }
                if let QpInstance::Explicit { qp } = &params.instance {
                    qp.validate().map_err(|e| Error::Config(e.to_string()))?;
                }
                if params.alpha.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
                    return bad("alpha must be positive".into());
                }
                if !(params.noise_bound >= 0.0 && params.sigma_scale >= 0.0) {
                    return bad("noise_bound and sigma_scale must be >= 0".into());
                }
            }
            ProblemConfig::Loadflow { params, .. } => {
                params.profile.validate().map_err(|e| Error::Config(e.to_string()))?;
                if !(params.noise_bound >= 0.0 && params.sigma_scale >= 0.0) {
                    return bad("noise_bound and sigma_scale must be >= 0".into());
                }
                if params.decomposition == Decomposition::Monolithic && params.noise_bound > 0.0 {
                    return bad("measurement noise needs the area decomposition".into());
                }
            }
        }
        if let ChannelConfig::IidDrop { probability, .. } = self.channel {
            if !(0.0..=1.0).contains(&probability) {
                return bad(format!("drop probability {probability} is not in [0, 1]"));
            }
        }
        if let ChannelConfig::Periodic { delays, .. } = &self.channel {
            ChannelPolicy::Periodic {
                delays: delays.clone(),
                phase: 0,
            }
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn norm_kind(&self) -> NormKind {
        match &self.problem {
            ProblemConfig::Affine { .. } => self.norm.unwrap_or(NormKind::EllInf),
            ProblemConfig::QpGradient { .. } => NormKind::Ell2,
            ProblemConfig::Loadflow { .. } => NormKind::EllInf,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AFFINE: &str = r#"{
        "problem": {"type": "affine", "params": {"m": 4, "target_l": 0.6, "drift": {"kind": "linear", "sigma": 0.05}}},
        "mode": "async",
        "norm": "ell_inf",
        "channel": {"kind": "sawtooth", "t_d": 3},
        "horizon": 100
    }"#;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_json(AFFINE).unwrap();
        assert_eq!(c.mode, Mode::Async);
        assert_eq!(c.channel, ChannelConfig::Sawtooth { t_d: 3 });
        assert_eq!(c.replicates, 1);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = AFFINE.replace("\"horizon\": 100", "\"horizon\": 100, \"horizn\": 5");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))));
        let text = AFFINE.replace("\"m\": 4", "\"m\": 4, \"extra\": 1");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_delays_in_sync_mode() {
        let text = AFFINE.replace("\"async\"", "\"sync\"");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn parses_loadflow_and_qp() {
        let lf = r#"{
            "problem": {"type": "loadflow", "params": {
                "network": {"builtin": "twelve_bus_three_area"},
                "profile": {"kind": "sine", "amplitude": 0.2, "period": 50}}},
            "mode": "async", "channel": {"kind": "iid_drop", "probability": 0.1}, "horizon": 300
        }"#;
        let c = ExperimentConfig::from_json(lf).unwrap();
        assert_eq!(c.norm_kind(), NormKind::EllInf);
        let qp = r#"{
            "problem": {"type": "qp-gradient", "params": {"instance": {"kind": "random", "n": 7}, "noise_bound": 0.01}},
            "mode": "sync", "norm": "ell_inf", "horizon": 300
        }"#;
        assert!(ExperimentConfig::from_json(qp).is_err());
    }
}
