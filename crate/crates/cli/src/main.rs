//! `lamsurf`: command-line driver for the λ-surface laboratory.
//!
//! Exit status: 0 when every asserted check passes, 1 when one fails,
//! 2 on usage, configuration or IO errors.

mod commands;
mod config;
mod report;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::branch::ContinueArgs;
use commands::estimate::EstimateArgs;
use commands::shoot::{ShootCurveArgs, ShootRevolutionArgs};
use commands::spectrum::SpectrumArgs;
use commands::verify::VerifyArgs;
use config::{Common, SuiteConfig};
use report::Report;

#[derive(Debug, Parser)]
#[command(name = "lamsurf", version, about = "Numerical laboratory for λ-surfaces H = ⟨x,n⟩/2 + λ")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Identity residuals on a surface.
    Verify(VerifyArgs),
    /// Top eigenvalues of the stability operator or the drift Laplacian.
    Spectrum(SpectrumArgs),
    /// Closed λ-curves in the plane.
    ShootCurve(ShootCurveArgs),
    /// Closed λ-surfaces of revolution.
    ShootRevolution(ShootRevolutionArgs),
    /// Round-sphere branch, linearization order and rigidity grid.
    Continue(ContinueArgs),
    /// Integral and pointwise estimates, on a shape or from a manifest.
    Estimate(EstimateArgs),
    /// Every command with default settings.
    All(AllArgs),
    /// Run a suite described by a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Validate a report against its versioned schema.
    ValidateReport { path: PathBuf },
}

#[derive(Debug, Clone, clap::Args)]
struct AllArgs {
    #[command(flatten)]
    common: Common,
}

impl Command {
    fn common(&self) -> Option<&Common> {
        match self {
            Command::Verify(a) => Some(&a.common),
            Command::Spectrum(a) => Some(&a.common),
            Command::ShootCurve(a) => Some(&a.common),
            Command::ShootRevolution(a) => Some(&a.common),
            Command::Continue(a) => Some(&a.common),
            Command::Estimate(a) => Some(&a.common),
            Command::All(a) => Some(&a.common),
            Command::Run { .. } | Command::ValidateReport { .. } => None,
        }
    }
}

fn compute(command: &Command) -> Result<Report> {
    match command {
        Command::Verify(a) => commands::verify::run(a),
        Command::Spectrum(a) => commands::spectrum::run(a),
        Command::ShootCurve(a) => commands::shoot::run_curve(a),
        Command::ShootRevolution(a) => commands::shoot::run_revolution(a),
        Command::Continue(a) => commands::branch::run(a),
        Command::Estimate(a) => commands::estimate::run(a),
        Command::All(_) | Command::Run { .. } | Command::ValidateReport { .. } => {
            unreachable!("not a single computation")
        }
    }
}

fn configure_threads(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        anyhow::ensure!(n >= 1, "--jobs must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn run_all(c: &Common) -> Result<bool> {
    let mut reports = Vec::new();
    for argv in commands::all_argv(c) {
        let cli = Cli::try_parse_from(&argv).with_context(|| format!("internal command line {argv:?}"))?;
        log::info!("running {}", argv[1]);
        reports.push(compute(&cli.command)?);
    }
    let summary = commands::summarize(c, &reports);
    let timestamp = !c.no_timestamp;
    if let Some(dir) = &c.out {
        for r in &reports {
            r.emit(Some(dir), timestamp)?;
        }
    }
    summary.emit(c.out.as_deref(), timestamp)?;
    Ok(summary.passed())
}

/// `Ok(true)` when all checks pass, `Ok(false)` on a failed check.
fn execute(cli: Cli) -> Result<bool> {
    if let Some(c) = cli.command.common() {
        configure_threads(c.jobs)?;
    }
    match &cli.command {
        Command::Run { config } => {
            let cfg = SuiteConfig::load(config)?;
            let inner = Cli::try_parse_from(cfg.to_argv()).context("invalid configuration")?;
            execute(inner)
        }
        Command::ValidateReport { path } => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            match schema::validate_report(&text) {
                Ok(version) => {
                    println!("valid (schema version {version})");
                    Ok(true)
                }
                Err(violations) => {
                    for v in &violations {
                        println!("invalid at {v}");
                    }
                    Ok(false)
                }
            }
        }
        Command::All(a) => run_all(&a.common),
        command => {
            let c = command.common().expect("computing command");
            let report = compute(command)?;
            report.emit(c.out.as_deref(), !c.no_timestamp)?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
