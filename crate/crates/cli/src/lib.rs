//! Driver for the `dpfilter` binary: configuration, subcommand pipelines,
//! output manifest and the built-in selftest.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid configuration or
//! arguments, 3 runtime failure.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{run_experiment, RunContext};
use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{sha256_hex, ConfigInfo, Manifest, OutputDir, SeedInfo};
use crate::selftest::{run_selftest, Fault};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const SEED_ENV: &str = "DPFILTER_SEED";
pub const DEFAULT_OUT: &str = "dpfilter-out";

#[derive(Debug, Parser)]
#[command(
    name = "dpfilter",
    version,
    about = "Gravitational decoherence and quantum filtering lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for trajectory ensembles.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Treat clipped kernel spectra beyond tolerance as errors.
    #[arg(long, global = true)]
    pub strict: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Kernel square-root, Mercer, PSD and Itô checks.
    KernelCheck,
    /// Master-equation decoherence of a superposition.
    Decohere,
    /// Homodyne measurement record replayed through the density filter.
    Filter,
    /// One number-counting trajectory.
    Jump,
    /// Trajectory ensemble against the master equation, Born statistics.
    Ensemble,
    /// Built-in miniature acceptance suite.
    Selftest {
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::Decohere => "decohere",
            Command::Filter => "filter",
            Command::Jump => "jump",
            Command::Ensemble => "ensemble",
            Command::Selftest { .. } => "selftest",
        }
    }
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        (false, 2) => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Exit code for an error: configuration problems are 2, the rest 3.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() || err.downcast_ref::<clap::Error>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<dpfilter_core::Error>() {
        Some(dpfilter_core::Error::Validation { .. } | dpfilter_core::Error::Sizing { .. }) => {
            EXIT_CONFIG
        }
        _ => EXIT_RUNTIME,
    }
}

fn resolve_seed(config_seed: u64) -> anyhow::Result<SeedInfo> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            let effective = v.trim().parse::<u64>().map_err(|_| ConfigError {
                path: SEED_ENV.into(),
                message: format!("must be an unsigned 64-bit integer, got `{v}`"),
            })?;
            log::info!("{SEED_ENV}={effective} overrides the config seed {config_seed}");
            Ok(SeedInfo {
                effective,
                source: format!("env:{SEED_ENV}"),
                config_value: config_seed,
            })
        }
        Err(_) => Ok(SeedInfo {
            effective: config_seed,
            source: "config".into(),
            config_value: config_seed,
        }),
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> anyhow::Result<(T, usize)> {
    match threads {
        Some(0) => Err(ConfigError {
            path: "--threads".into(),
            message: "must be at least 1".into(),
        }
        .into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok((pool.install(f), n))
        }
        None => Ok((f(), rayon::current_num_threads())),
    }
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    let name = cli.command.name();
    if let Command::Selftest { inject_fault } = &cli.command {
        let (report, threads) = with_threads(cli.threads, || run_selftest(*inject_fault))?;
        let report = report?;
        let table = report.to_table();
        print!("{table}");
        if let Some(dir) = &cli.out {
            let mut out = OutputDir::create(dir)?;
            out.write_json("selftest.json", &report)?;
            out.write_text("selftest.txt", &table)?;
            manifest(name, None, None, threads, cli.strict, report.passed, &out)?;
        }
        return Ok(if report.passed {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        });
    }
    let path = cli.config.as_ref().ok_or_else(|| ConfigError {
        path: "--config".into(),
        message: format!("`{name}` needs a configuration file"),
    })?;
    let (config, bytes) = ExperimentConfig::load(path)?;
    let seed = resolve_seed(config.run.seed)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| config.outputs.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut out = OutputDir::create(&dir)?;
    let ctx = RunContext {
        seed: seed.effective,
        strict: cli.strict,
    };
    let (outcome, threads) =
        with_threads(cli.threads, || run_experiment(name, config, &ctx, &mut out))?;
    let outcome = outcome?;
    print!("{}", outcome.report);
    let info = ConfigInfo {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    manifest(
        name,
        Some(info),
        Some(seed),
        threads,
        cli.strict,
        outcome.passed,
        &out,
    )?;
    Ok(if outcome.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn manifest(
    subcommand: &str,
    config: Option<ConfigInfo>,
    seed: Option<SeedInfo>,
    threads: usize,
    strict: bool,
    passed: bool,
    out: &OutputDir,
) -> anyhow::Result<()> {
    Manifest {
        tool: "dpfilter",
        version: env!("CARGO_PKG_VERSION"),
        core_version: dpfilter_core::VERSION,
        subcommand: subcommand.to_string(),
        config,
        seed,
        threads,
        strict,
        passed,
        files: out.files().to_vec(),
    }
    .write(out.root())
}

/// Parses arguments, runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose, cli.quiet);
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}
