use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use superkit::decomp::{self, DecompositionConfig, Method};
use superkit::grape::{self, GrapeConfig};
use superkit::json as sjson;
use superkit::qec::{self, QecConfig};
use superkit::replication::{self, ExperimentName, ExperimentSpec};
use superkit::superchan::SuperchannelChoi;
use superkit::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "superkit", version, about = "Qubit superchannel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one of the built-in experiments and export its artifacts.
    Run {
        /// extreme, dephasing, decomposition, qec_scan or grape_demo
        experiment: String,
        /// Experiment spec JSON; command-line flags override its fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the printed matrices without unitary projection.
        #[arg(long)]
        raw_matrices: bool,
        /// Damping grid for qec_scan, as start:stop:step.
        #[arg(long)]
        lambdas: Option<String>,
    },
    /// Fit a convex mixture of gen-extreme superchannels to a 16x16 Choi matrix.
    Decompose {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 2)]
        components: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Lbfgs)]
        method: MethodArg,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimized ebit-code fidelity against amplitude damping strength.
    QecScan {
        #[arg(long, default_value = replication::DEFAULT_LAMBDAS)]
        lambdas: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize a control pulse for a target unitary.
    Grape {
        /// Spin system JSON.
        #[arg(long)]
        system: PathBuf,
        /// Target unitary matrix JSON.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 100)]
        slices: usize,
        /// Pulse length in seconds.
        #[arg(long, default_value_t = 0.02)]
        duration: f64,
        #[arg(long, default_value_t = 0.995)]
        target_fidelity: f64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 3)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Average over RF amplitude miscalibration.
        #[arg(long)]
        robust: bool,
        /// Output directory for pulse.json and grape_convergence.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Lbfgs,
    NelderMead,
}

fn write_or_print(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, body)?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn summary(v: serde_json::Value) -> Result<()> {
    print!("{}", sjson::to_pretty(&v)?);
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            experiment,
            spec,
            out,
            samples,
            seed,
            raw_matrices,
            lambdas,
        } => {
            let name: ExperimentName = experiment.parse()?;
            let mut s = match &spec {
                Some(p) => ExperimentSpec::from_file(p)?,
                None => ExperimentSpec::new(name),
            };
            if s.name != name {
                return Err(Error::InvalidArgument(format!(
                    "spec file describes {}, but {name} was requested",
                    s.name
                )));
            }
            if let Some(n) = samples {
                s.sample_count = n;
            }
            if let Some(seed) = seed {
                s.seed = seed;
            }
            s.raw_matrices |= raw_matrices;
            if lambdas.is_some() {
                s.lambdas = lambdas;
            }
            let dir = out
                .or_else(|| s.output_dir.clone())
                .ok_or_else(|| Error::Missing("no output directory: pass --out".into()))?;
            let report = replication::run(&s)?;
            let files = replication::export_report(&report, &dir)?;
            summary(json!({
                "experiment": name,
                "output_dir": dir,
                "files": files.len(),
                "bundle_sha256": report.bundle_sha256,
            }))
        }
        Command::Decompose {
            target,
            components,
            seed,
            restarts,
            max_iters,
            tolerance,
            method,
            out,
        } => {
            let target = SuperchannelChoi::new(sjson::read_matrix(&target)?)?;
            let cfg = DecompositionConfig {
                restarts,
                max_iters,
                tolerance,
                seed,
                method: match method {
                    MethodArg::Lbfgs => Method::Lbfgs,
                    MethodArg::NelderMead => Method::NelderMead,
                },
                ..Default::default()
            };
            let d = decomp::decompose(&target, components, &cfg)?;
            write_or_print(
                out.as_deref(),
                &sjson::to_pretty(&sjson::decomposition_to_value(&d))?,
            )
        }
        Command::QecScan {
            lambdas,
            seed,
            restarts,
            out,
        } => {
            let grid = qec::parse_lambda_range(&lambdas)?;
            let cfg = QecConfig {
                seed,
                restarts,
                ..Default::default()
            };
            let curve = qec::fidelity_curve(&grid, &cfg)?;
            write_or_print(out.as_deref(), &qec::curve_csv(&curve))
        }
        Command::Grape {
            system,
            target,
            slices,
            duration,
            target_fidelity,
            max_iters,
            restarts,
            seed,
            robust,
            out,
        } => {
            let sys = sjson::spin_system_from_value(&sjson::read_value(&system)?)?;
            let u = sjson::read_matrix(&target)?;
            let cfg = GrapeConfig {
                n_slices: slices,
                duration,
                target_fidelity,
                max_iters,
                restarts,
                seed,
                robust,
                ..Default::default()
            };
            let res = grape::grape_optimize(&sys, &u, &cfg)?;
            fs::create_dir_all(&out)?;
            sjson::write_json(&out.join("pulse.json"), &sjson::pulse_to_value(&res.pulse))?;
            fs::write(out.join("grape_convergence.csv"), res.history_csv())?;
            summary(json!({
                "fidelity": res.fidelity,
                "converged": res.converged,
                "iterations": res.history.len(),
                "output_dir": out,
            }))
        }
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
