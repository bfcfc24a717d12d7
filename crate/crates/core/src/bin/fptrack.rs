use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fptrack::bounds::{BoundInputs, BoundTable};
use fptrack::experiment::{audit_config, run_experiment, sweep, CertificateStatus, ExperimentConfig, SweepParam};
use fptrack::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CERTIFICATE: u8 = 3;
const EXIT_AUDIT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "fptrack",
    version,
    about = "Track fixed points of time-varying contractions and certify error bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and check its bound certificates.
    Run {
        config: PathBuf,
        /// Overrides the output directory of the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run an experiment once per value of one parameter.
    Sweep {
        config: PathBuf,
        /// drop_probability, t_d, alpha, noise_bound or sigma_scale.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Print every asymptotic bound for a JSON set of bound inputs.
    Bounds { inputs: PathBuf },
    /// Check the assumptions of the configured family without running it.
    Audit {
        config: PathBuf,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::InvalidInput(_)
        | Error::LengthMismatch { .. }
        | Error::PartitionUnsupported(_)
        | Error::PreconditionFailed(_)
        | Error::ContractionUncertified { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn load(path: &Path) -> Result<(ExperimentConfig, Option<PathBuf>), Error> {
    let cfg = ExperimentConfig::from_path(path)?;
    Ok((cfg, path.parent().map(Path::to_path_buf)))
}

fn run(config: &Path, output: Option<PathBuf>) -> Result<u8, Error> {
    let (mut cfg, dir) = load(config)?;
    if output.is_some() {
        cfg.output = output;
    }
    let out = run_experiment(&cfg, dir.as_deref())?;
    for r in &out.report.runs {
        println!(
            "replicate {} (seed {}): tail max {:.6e}, final error {:.6e}, T_d {}, N_d {}",
            r.replicate, r.seed, r.tail.tail_max, r.final_error, r.inputs.t_d, r.inputs.n_d
        );
        for c in &r.certificates {
            if c.status == CertificateStatus::NotApplicable {
                continue;
            }
            let status = if c.status == CertificateStatus::Pass {
                "pass"
            } else {
                "FAIL"
            };
            match c.bound {
                Some(b) => println!(
                    "  {:<18} {status}  observed {:.6e} <= bound {:.6e}",
                    c.name,
                    c.observed.unwrap_or(f64::NAN),
                    b
                ),
                None => println!("  {:<18} {status}", c.name),
            }
        }
        if let Some(w) = r.in_step_window {
            println!("  step size inside window: {w}");
        }
    }
    println!(
        "median tail error: {:.6e} (ell_inf {:.6e})",
        out.report.median_tail_error, out.report.median_tail_error_inf
    );
    if !out.report.certificates_passed {
        eprintln!("bound certificate failed");
        return Ok(EXIT_CERTIFICATE);
    }
    if out.report.audit_passed == Some(false) {
        eprintln!("assumption audit failed");
        return Ok(EXIT_AUDIT);
    }
    Ok(0)
}

fn run_sweep(config: &Path, param: &str, values: &[f64]) -> Result<u8, Error> {
    let (cfg, dir) = load(config)?;
    let param: SweepParam = param.parse()?;
    let report = sweep(&cfg, dir.as_deref(), param, values)?;
    println!("{report}");
    Ok(if report.rows.iter().all(|r| r.certificates_passed) {
        0
    } else {
        EXIT_CERTIFICATE
    })
}

fn bounds(inputs: &Path) -> Result<u8, Error> {
    let text = std::fs::read_to_string(inputs)?;
    let inputs: BoundInputs = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    inputs.validate()?;
    println!("{}", BoundTable::evaluate(&inputs));
    Ok(0)
}

fn audit(config: &Path, samples: usize) -> Result<u8, Error> {
    let (cfg, dir) = load(config)?;
    let a = audit_config(&cfg, dir.as_deref(), samples)?;
    let f = &a.family;
    println!(
        "declared L {:.6}, sampled estimate {:.6} ({})",
        a.declared_lipschitz,
        f.lipschitz_estimate,
        ok(f.lipschitz_ok)
    );
    println!("self-map on the domain: {}", ok(f.self_map_ok));
    println!(
        "e_f {:.6e}, largest sampled deviation {:.6e} ({})",
        a.e_f,
        f.e_f_max_deviation,
        ok(f.e_f_ok)
    );
    println!("dependency graph: {}", ok(a.dependency.consistent));
    if f.insufficient_sampling {
        println!("warning: too few usable sample pairs");
    }
    println!("sigma over the horizon: {:.6e}", a.sigma);
    Ok(if a.passed() { 0 } else { EXIT_AUDIT })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, output } => run(config, output.clone()),
        Command::Sweep { config, param, values } => run_sweep(config, param, values),
        Command::Bounds { inputs } => bounds(inputs),
        Command::Audit { config, samples } => audit(config, *samples),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
