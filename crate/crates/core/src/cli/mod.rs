//! Command-line front end.
//!
//! `keplerdrag <command> --config <path> [--out <dir>] [--delta <v>] [--jobs <n>]`
//! with commands `simulate`, `portrait`, `series`, `manifold` and `verify`.
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure,
//! 3 verification failure. `KEPLERDRAG_JOBS` takes precedence over `--jobs`.

pub mod config;
pub mod export;
pub mod itinerary;
pub mod portrait;
pub mod simulate;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{Mode, ScenarioConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const JOBS_ENV: &str = "KEPLERDRAG_JOBS";
pub const DEFAULT_OUT: &str = "keplerdrag-out";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Runtime(format!("{}: {e}", path.display()));
    let f = File::create(path).map_err(|e| err(&e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| err(&e))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| err(&e))
}

#[derive(Debug, Parser)]
#[command(
    name = "keplerdrag",
    version,
    about = "Kepler problem with linear drag on blowup charts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a batch of initial conditions.
    Simulate(CommonArgs),
    /// Level sets of H on the l = 0 plane.
    Portrait(CommonArgs),
    /// Series coefficients of the stable manifold of q1 and its evaluation.
    Series(CommonArgs),
    /// Stable fibers, shooting and the centre manifold at infinity.
    Manifold(CommonArgs),
    /// Analytic-identity battery.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `delta` of the scenario.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Command {
    pub fn mode(&self) -> Mode {
        match self {
            Command::Simulate(_) => Mode::Simulate,
            Command::Portrait(_) => Mode::Portrait,
            Command::Series(_) => Mode::Series,
            Command::Manifold(_) => Mode::Manifold,
            Command::Verify(_) => Mode::Verify,
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a)
            | Command::Portrait(a)
            | Command::Series(a)
            | Command::Manifold(a)
            | Command::Verify(a) => a,
        }
    }
}

/// Thread count: `KEPLERDRAG_JOBS`, then `--jobs`, then the machine.
pub fn resolve_jobs(flag: Option<usize>, env: Option<&str>) -> Result<usize, CliError> {
    if let Some(s) = env.filter(|s| !s.trim().is_empty()) {
        return match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!(
                "{JOBS_ENV} = {s:?} is not a positive integer"
            ))),
        };
    }
    match flag {
        Some(0) => Err(CliError::Config("--jobs must be positive".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Scenario with command-line overrides applied and checked.
pub fn load_config(mode: Mode, args: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(CliError::Config(format!(
                "scenario is for `{}`, not `{}`",
                m.name(),
                mode.name()
            )));
        }
    }
    if let Some(d) = args.delta {
        cfg.delta = d;
    }
    if let Some(o) = &args.out {
        cfg.output.dir = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run one command; returns the process exit code.
pub fn run(command: &Command) -> Result<(), CliError> {
    let mode = command.mode();
    let args = command.args();
    let cfg = load_config(mode, args)?;
    let jobs = resolve_jobs(args.jobs, std::env::var(JOBS_ENV).ok().as_deref())?;
    let out = cfg
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    match mode {
        Mode::Simulate => {
            let t0 = std::time::Instant::now();
            let s = simulate::cmd_simulate(&cfg, &out, jobs)?;
            eprintln!(
                "{} orbits in {:.1} s",
                s.orbit_count,
                t0.elapsed().as_secs_f64()
            );
            for b in &s.batches {
                println!(
                    "batch {}: {}/{} completed, H_inf mean {} in [{}, {}], {} match the itinerary pattern",
                    b.batch,
                    b.completed,
                    b.orbits,
                    b.h_infinity_mean.map_or("-".into(), |v| format!("{v:.9}")),
                    b.h_infinity_min.map_or("-".into(), |v| format!("{v:.9}")),
                    b.h_infinity_max.map_or("-".into(), |v| format!("{v:.9}")),
                    b.pattern_matches
                );
            }
            if s.failed > 0 {
                return Err(CliError::Runtime(format!(
                    "{} of {} orbits failed",
                    s.failed, s.orbit_count
                )));
            }
        }
        Mode::Portrait => {
            let s = portrait::cmd_portrait(&cfg.portrait.h_list, cfg.portrait.points, &out)?;
            for l in &s.levels {
                match &l.error {
                    None => println!("h = {}: {} vertices", l.h, l.vertices),
                    Some(e) => println!("h = {}: {e}", l.h),
                }
            }
            if s.failures() > 0 {
                return Err(CliError::Runtime(format!(
                    "{} levels rejected",
                    s.failures()
                )));
            }
        }
        Mode::Series => {
            let s = export::cmd_series(cfg.delta, &cfg.series, &out)?;
            println!(
                "N = {}, parity {}, max residual {:.3e}",
                s.order, s.parity_holds, s.max_residual
            );
            if let Some(g) = s.gevrey {
                println!("Gevrey fit a = {:.4e}, b = {:.6}", g.a, g.b);
            }
        }
        Mode::Manifold => {
            let s = export::cmd_manifold(cfg.delta, &cfg.manifold, &out, jobs)?;
            if !s.fibers.is_empty() {
                println!(
                    "fibers: {}/{} converged",
                    s.fibers_converged,
                    s.fibers.len()
                );
            }
            for sh in s.shots.iter().filter_map(|x| x.shot.as_ref()) {
                println!("shoot l0 = {}: r1 = {:.12}, v = {:.12}", sh.l0, sh.r1, sh.v);
            }
            if let Some(c) = &s.center {
                println!(
                    "center manifold: c = {:.6}, residual {:.2e}",
                    c.c, c.residual
                );
            }
            if s.failures() > 0 {
                return Err(CliError::Runtime(format!(
                    "{} manifold computations failed",
                    s.failures()
                )));
            }
        }
        Mode::Verify => {
            let rep = verify::run_battery(cfg.delta, &cfg.verify)
                .map_err(|e| CliError::Config(e.to_string()))?;
            for c in &rep.checks {
                println!("{}", c.line());
            }
            std::fs::create_dir_all(&out)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
            write_json(&out.join("verify.json"), &rep)?;
            if !rep.all_passed() {
                let n = rep.checks.iter().filter(|c| !c.passed).count();
                return Err(CliError::Verification(format!("{n} checks failed")));
            }
        }
    }
    Ok(())
}

/// Entry point of the binary.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("keplerdrag: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
