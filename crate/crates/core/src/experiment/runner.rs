//! Builds problem instances from a configuration and runs them.

use std::path::Path;

use super::config::{Decomposition, ExperimentConfig, Mode, ProblemConfig, QpInstance};
use super::report::{
    headline_bound, verify_bounds, write_atomic, write_trace_csv, ExperimentReport, RunReport, TailSummary,
};
use crate::async_sim::{
    audit_dependency_graph, run_async_tracker_with_reference, DependencyAudit, DependencyGraph, InexactMapFamily,
    Perturbation,
};
use crate::audit::{audit_family, AuditSummary};
use crate::bounds::{gradient_step_window, per_iterate_bound_series, BoundInputs, BoundTable};
use crate::error::{Error, Result};
use crate::norm::NormSpec;
use crate::problems::{
    build_affine, build_feedback_gradient_map, build_loadflow_map, build_multiarea_maps, star_partition, AffineParams,
    Injection, MeasurementNoise, MultiAreaOptions, TimeVaryingQp,
};
use crate::rng::derive_seed;
use crate::solver::{compute_fixed_point_series, FixedPointSeries, SolverOptions};
use crate::tracker::{run_online_tracker_with_reference, TrackingTrace};

/// A problem ready to run: map, agent graph, reference points and start.
#[derive(Clone)]
pub struct Instance {
    pub map: InexactMapFamily,
    pub graph: DependencyGraph,
    pub reference: FixedPointSeries,
    pub x0: Vec<f64>,
    /// The QP and step size, for the step-window flag.
    pub qp: Option<(TimeVaryingQp, f64)>,
}

/// Seed of replicate `k`: drives channels and measurement noise.
pub fn replicate_seed(cfg: &ExperimentConfig, k: usize) -> u64 {
    derive_seed(cfg.seed, &[k as u64])
}

/// Builds the instance for one replicate. The problem data depend only on
/// `instance_seed`; `noise_seed` drives perturbations and measurement noise.
pub fn build_instance(cfg: &ExperimentConfig, base_dir: Option<&Path>, noise_seed: u64) -> Result<Instance> {
    cfg.validate()?;
    let horizon = cfg.horizon;
    let norm_kind = cfg.norm_kind();
    let (map, graph, reference, qp) = match &cfg.problem {
        ProblemConfig::Affine { params, instance_seed } => {
            let fam = build_affine(
                &AffineParams {
                    m: params.m,
                    target_l: params.target_l,
                    drift: params.drift.clone(),
                    coupling: params.coupling,
                    scaling: params.scaling,
                },
                norm_kind,
                *instance_seed,
            )?;
            let graph = fam.graph().clone();
            let mut base = fam.into_family();
            if let Some(l) = params.declared_l {
                base = base.with_declared_lipschitz(l)?;
            }
            let map = InexactMapFamily::with_perturbation(
                base,
                Perturbation {
                    radius: params.e_f,
                    mode: params.perturbation_mode,
                    seed: noise_seed,
                },
            )?;
            (map, graph, None, None)
        }
        ProblemConfig::QpGradient { params, instance_seed } => {
            let mut qp = match &params.instance {
                QpInstance::Random { n } => TimeVaryingQp::random(*n, *instance_seed),
                QpInstance::Explicit { qp } => qp.clone(),
            };
            qp.w = qp.w.scaled(params.sigma_scale);
            qp.r = qp.r.scaled(params.sigma_scale);
            let alpha = params.alpha.unwrap_or_else(|| 1.0 / (qp.smoothness() + qp.eta));
            let noise = MeasurementNoise {
                bound: params.noise_bound,
                mode: params.noise_mode,
                seed: noise_seed,
            };
            let map = build_feedback_gradient_map(&qp, alpha, noise)?;
            let graph = star_partition(&qp)?;
            (map, graph, None, Some((qp, alpha)))
        }
        ProblemConfig::Loadflow { params, instance_seed } => {
            let net = params.network.load(base_dir)?;
            let profile = params.profile.scaled(params.sigma_scale);
            let injection = Injection::new(&profile, &net.injections, horizon + 1, *instance_seed)?;
            match params.decomposition {
                Decomposition::Monolithic => {
                    let base = build_loadflow_map(&net, &injection)?;
                    let graph = DependencyGraph::complete(vec![2; net.n_buses])?;
                    (InexactMapFamily::exact(base), graph, None, None)
                }
                Decomposition::Areas => {
                    let opts = params
                        .areas
                        .clone()
                        .unwrap_or_else(|| MultiAreaOptions::for_areas(net.areas.len()));
                    let noise = MeasurementNoise {
                        bound: params.noise_bound,
                        mode: params.noise_mode,
                        seed: noise_seed,
                    };
                    let ma = build_multiarea_maps(&net, &injection, horizon, noise, &opts)?;
                    let reference = FixedPointSeries::from_points(
                        ma.reference[..horizon].to_vec(),
                        vec![0.0; horizon],
                        ma.family.base().norm(),
                    );
                    (ma.family, ma.graph, Some(reference), None)
                }
            }
        }
    };
    let base = map.base();
    let reference = match reference {
        Some(r) => r,
        None => compute_fixed_point_series(base, horizon, base.norm(), SolverOptions::default())?,
    };
    let x0 = base.domain().center();
    Ok(Instance {
        map,
        graph,
        reference,
        x0,
        qp,
    })
}

/// One replicate's trace, report and bound overlays.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace: TrackingTrace,
    pub per_iterate: Option<Vec<f64>>,
    pub asymptotic: Option<f64>,
}

/// `max(0.9·h, transient·h, 10·T_d)`, capped below `h`.
pub fn tail_start(horizon: usize, transient_fraction: f64, t_d: usize) -> usize {
    let h = horizon as f64;
    let start = (0.9 * h).floor().max((transient_fraction * h).floor()) as usize;
    start.max(10 * t_d).min(horizon - 1)
}

/// Runs replicate `k` of `cfg`.
pub fn run_replicate(cfg: &ExperimentConfig, base_dir: Option<&Path>, k: usize) -> Result<RunOutcome> {
    let seed = replicate_seed(cfg, k);
    let inst = build_instance(cfg, base_dir, seed)?;
    run_instance(cfg, &inst, base_dir, k, seed)
}

/// Runs a prepared instance with the channel seeded by `seed`.
pub fn run_instance(
    cfg: &ExperimentConfig,
    inst: &Instance,
    base_dir: Option<&Path>,
    k: usize,
    seed: u64,
) -> Result<RunOutcome> {
    let trace = match cfg.mode {
        Mode::Sync => {
            let mut t = run_online_tracker_with_reference(&inst.map, &inst.x0, inst.reference.clone())?;
            t.seed = Some(seed);
            t
        }
        Mode::Async => {
            let channels = cfg.channel.model(&inst.graph, seed, base_dir)?;
            run_async_tracker_with_reference(&inst.map, &inst.graph, &channels, &inst.x0, inst.reference.clone())?.trace
        }
    };
    let base = inst.map.base();
    let norm_kind = base.norm().kind;
    let l = trace.lipschitz_series.iter().copied().fold(0.0, f64::max);
    let e_f = trace.e_f_series.iter().copied().fold(0.0, f64::max);
    let m = inst.graph.computing_agents().len();
    let (t_d, n_d) = trace.delay.as_ref().map_or((0, 0), |d| (d.t_d, d.n_d));
    let inputs = BoundInputs::new(l, e_f, trace.reference.sigma_sup, m, norm_kind).with_delay(t_d, n_d);
    let bounds = BoundTable::evaluate(&inputs);

    let per_iterate = match cfg.mode {
        Mode::Sync => Some(per_iterate_bound_series(
            trace.errors[0],
            &trace.e_f_series,
            &trace.reference.sigma_series,
            &trace.lipschitz_series,
        )?),
        Mode::Async => None,
    };
    let start = tail_start(cfg.horizon, cfg.transient_fraction, t_d);
    let errors_inf = trace.errors_in(&NormSpec::ell_inf());
    let tail = TailSummary {
        tail_start: start,
        tail_max: trace.tail_max(start),
        tail_max_inf: errors_inf.iter().skip(start).copied().fold(0.0, f64::max),
        per_iterate_excess: per_iterate.as_ref().map(|p| {
            trace
                .errors
                .iter()
                .zip(p)
                .map(|(e, b)| e - b)
                .fold(f64::NEG_INFINITY, f64::max)
        }),
    };
    let certificates = verify_bounds(&tail, &inputs, cfg.mode, base.block_lipschitz().is_some());
    let in_step_window = inst
        .qp
        .as_ref()
        .map(|(qp, alpha)| gradient_step_window(qp.smoothness(), qp.eta, n_d).is_ok_and(|w| w.contains(*alpha)));
    let audit = if cfg.audit_samples > 0 {
        Some(audit_family(
            &inst.map,
            &audit_times(cfg.horizon),
            cfg.audit_samples,
            seed,
        )?)
    } else {
        None
    };
    let asymptotic = headline_bound(&bounds, cfg.mode, norm_kind);
    let report = RunReport {
        replicate: k,
        seed,
        problem: cfg.problem.name().into(),
        mode: cfg.mode,
        norm: base.norm().to_string(),
        horizon: cfg.horizon,
        inputs,
        bounds,
        delay: trace.delay.clone(),
        tail,
        final_error: *trace.errors.last().unwrap_or(&f64::NAN),
        certificates,
        in_step_window,
        audit,
    };
    Ok(RunOutcome {
        report,
        trace,
        per_iterate,
        asymptotic,
    })
}

fn audit_times(horizon: usize) -> Vec<usize> {
    let mut t = vec![1, horizon / 2, horizon - 1];
    t.retain(|x| *x >= 1);
    t.dedup();
    t
}

/// All replicates of an experiment, plus written outputs when `cfg.output`
/// is set: `trace.csv` (or `trace_r{k}.csv`) and `report.json`.
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub runs: Vec<RunOutcome>,
}

pub fn run_experiment(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let runs = run_replicates(cfg, base_dir)?;
    let report = ExperimentReport::from_runs(runs.iter().map(|r| r.report.clone()).collect());
    if let Some(out) = &cfg.output {
        let dir = match base_dir {
            Some(d) if out.is_relative() => d.join(out),
            _ => out.clone(),
        };
        write_outputs(&dir, &report, &runs)?;
    }
    Ok(ExperimentOutcome { report, runs })
}

/// Replicates run on scoped threads; each is sequential and seeded, so the
/// result does not depend on scheduling.
fn run_replicates(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Vec<RunOutcome>> {
    let n = cfg.replicates;
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(n);
    if workers <= 1 {
        return (0..n).map(|k| run_replicate(cfg, base_dir, k)).collect();
    }
    let mut slots: Vec<Option<Result<RunOutcome>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|s| {
        let chunks: Vec<_> = slots.chunks_mut(n.div_ceil(workers)).enumerate().collect();
        for (c, chunk) in chunks {
            let first = c * n.div_ceil(workers);
            s.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_replicate(cfg, base_dir, first + i));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every replicate ran")).collect()
}

pub fn write_outputs(dir: &Path, report: &ExperimentReport, runs: &[RunOutcome]) -> Result<()> {
    for run in runs {
        let name = if runs.len() == 1 {
            "trace.csv".to_string()
        } else {
            format!("trace_r{}.csv", run.report.replicate)
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &run.trace, run.per_iterate.as_deref(), run.asymptotic)?;
        write_atomic(&dir.join(name), &buf)?;
    }
    write_atomic(&dir.join("report.json"), &serde_json::to_vec_pretty(report)?)?;
    Ok(())
}

/// Assumption checks for the configured family without running it.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConfigAudit {
    pub family: AuditSummary,
    pub dependency: DependencyAudit,
    pub declared_lipschitz: f64,
    pub e_f: f64,
    pub sigma: f64,
}

impl ConfigAudit {
    pub fn passed(&self) -> bool {
        self.family.passed() && self.dependency.consistent
    }
}

pub fn audit_config(cfg: &ExperimentConfig, base_dir: Option<&Path>, n_samples: usize) -> Result<ConfigAudit> {
    if n_samples == 0 {
        return Err(Error::Config("audit needs a positive sample count".into()));
    }
    let seed = replicate_seed(cfg, 0);
    let inst = build_instance(cfg, base_dir, seed)?;
    let family = audit_family(&inst.map, &audit_times(cfg.horizon), n_samples, seed)?;
    let dependency = audit_dependency_graph(inst.map.base(), &inst.graph, 50, seed)?;
    Ok(ConfigAudit {
        family,
        dependency,
        declared_lipschitz: inst.map.base().lipschitz_max_over(cfg.horizon),
        e_f: inst.map.e_f_sup(),
        sigma: inst.reference.sigma_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::report::CertificateStatus;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn tail_window_rules() {
        assert_eq!(tail_start(1000, 0.1, 0), 900);
        assert_eq!(tail_start(1000, 0.95, 0), 950);
        assert_eq!(tail_start(100, 0.1, 20), 99);
    }

    #[test]
    fn static_affine_decays_and_passes() {
        let c = cfg(
            r#"{"problem": {"type": "affine", "params": {"m": 5, "target_l": 0.5, "drift": {"kind": "constant"}}},
                       "mode": "sync", "norm": "ell_2", "horizon": 60, "audit_samples": 100}"#,
        );
        let out = run_experiment(&c, None).unwrap();
        let run = &out.runs[0];
        assert!(run.report.certificates_passed());
        assert_eq!(run.report.certificate("sync").unwrap().status, CertificateStatus::Pass);
        // geometric decay with ratio at most L
        let e = &run.trace.errors;
        for t in 0..20 {
            assert!(e[t + 1] <= 0.5 * e[t] + 1e-12);
        }
        assert!(out.report.audit_passed.unwrap());
    }

    #[test]
    fn outputs_are_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            r#"{{"problem": {{"type": "qp-gradient", "params": {{"instance": {{"kind": "random", "n": 4}}, "noise_bound": 0.01}}}},
                "mode": "async", "channel": {{"kind": "iid_drop", "probability": 0.2}}, "horizon": 80,
                "replicates": 3, "audit_samples": 0, "output": "{}"}}"#,
            dir.path().join("a").display()
        );
        run_experiment(&cfg(&text), None).unwrap();
        let text_b = text.replace(
            &dir.path().join("a").display().to_string(),
            &dir.path().join("b").display().to_string(),
        );
        run_experiment(&cfg(&text_b), None).unwrap();
        for f in ["trace_r0.csv", "trace_r2.csv", "report.json"] {
            let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
            assert_eq!(a, b, "{f}");
        }
        let csv = std::fs::read_to_string(dir.path().join("a/trace_r0.csv")).unwrap();
        assert!(csv.starts_with("t,error,per_iterate_bound,asymptotic_bound,realized_Td_so_far,realized_Nd_so_far\n"));
    }
}
