//! Batch runner for the qlan laboratory: config parsing, job execution and
//! CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod jobs;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::jobs::Registry;
use crate::run::{run, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "qlan", version, about = "Numerical checks for classical and quantum statistical experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Run every job in the config.
    Run(RunArgs),
    /// Hellinger transforms at the listed simplex points.
    Hellinger(RunArgs),
    /// Canonical measure of a classical experiment.
    CanonicalMeasure(RunArgs),
    /// Deficiency between two classical experiments.
    Deficiency(RunArgs),
    /// Connes cocycles with unitarity and cocycle-identity residuals.
    Cocycle(RunArgs),
    /// Canonical state on group words.
    CanonicalState(RunArgs),
    /// Sufficiency of a subalgebra on a grid of modular times.
    SuffCheck(RunArgs),
    /// Finite-n cocycle expectations against the Weyl limit.
    LanVerify(RunArgs),
    /// Qubit closed forms against the generic pipeline.
    QubitDemo(RunArgs),
    /// Print the config with all defaults filled in.
    Normalize {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Multiplies every tolerance except the burn-in.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Seed for randomly drawn words.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load(path: &PathBuf) -> Result<(RunConfig, String), CliError> {
    let display = path.display().to_string();
    let source = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{display}: {e}")))?;
    Ok((RunConfig::parse(&source, &display)?, source))
}

fn execute(args: RunArgs, only: Option<&str>) -> Result<i32, CliError> {
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    if !(args.tolerance_scale.is_finite() && args.tolerance_scale > 0.0) {
        return Err(CliError::Usage("--tolerance-scale must be positive".into()));
    }
    let (cfg, source) = load(&args.config)?;
    let registry = Registry::build(&cfg, &source, &args.config.display().to_string())?;
    let opts = RunOptions {
        out: args.out,
        threads: args.jobs,
        tolerance_scale: args.tolerance_scale,
        seed: args.seed,
        only: only.map(str::to_string),
    };
    let summary = run(&cfg, &registry, &opts);
    for r in &summary.results {
        match r {
            Ok(o) => println!("[{}] {} ({}): {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.command, o.summary),
            Err(e) => eprintln!("error: {e}"),
        }
    }
    Ok(summary.exit_code())
}

/// Entry point; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::PASS };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.command {
        Sub::Run(a) => execute(a, None),
        Sub::Hellinger(a) => execute(a, Some("hellinger")),
        Sub::CanonicalMeasure(a) => execute(a, Some("canonical-measure")),
        Sub::Deficiency(a) => execute(a, Some("deficiency")),
        Sub::Cocycle(a) => execute(a, Some("cocycle")),
        Sub::CanonicalState(a) => execute(a, Some("canonical-state")),
        Sub::SuffCheck(a) => execute(a, Some("suff-check")),
        Sub::LanVerify(a) => execute(a, Some("lan-verify")),
        Sub::QubitDemo(a) => execute(a, Some("qubit-demo")),
        Sub::Normalize { config } => load(&config).map(|(cfg, _)| {
            println!("{}", cfg.to_pretty_json());
            exit::PASS
        }),
    };
    res.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}
