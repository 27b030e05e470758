//! Command-line front end for `vogellab`.
//!
//! `run` is the whole program; `main` only forwards `std::env::args` to it,
//! which lets the integration tests drive the CLI in-process.

mod commands;
pub mod manifest;
pub mod report;
pub mod spec;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::manifest::{strip_manifest_flag, RunManifest};
use crate::spec::StateSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "VOGELLAB_THREADS";

/// Bad flags or arguments; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub(crate) fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Parser, Debug)]
#[command(name = "vogellab", version, about = "Simulate homodyne records and test them for nonclassicality")]
pub struct Cli {
    /// Write a JSON run manifest (command, parameters, paths, seed, timing).
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a quadrature record from a state through a detector model.
    Simulate(SimulateArgs),
    /// Estimate the characteristic function of one or more records and run
    /// the Vogel test.
    Analyze(AnalyzeArgs),
    /// Minimum sample counts versus photon fraction, as CSV.
    Plan(PlanArgs),
    /// Exact characteristic function of a state next to the vacuum's, as CSV.
    Curves(CurvesArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// mix:<eta> | diosi:<n_max> | fock:<w0,w1,...>
    #[arg(long, value_parser = spec::parse_state)]
    pub state: StateSpec,
    /// Number of samples.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Overall detection efficiency in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    /// Gaussian electronic noise, standard deviation in quadrature units.
    #[arg(long, default_value_t = 0.0)]
    pub electronic_noise: f64,
    /// Write raw photoelectron differences instead of normalized quadratures.
    #[arg(long)]
    pub raw: bool,
    /// Mean photoelectrons per LO pulse; sets the raw scale.
    #[arg(long, default_value_t = 1e6)]
    pub lo_mean_count: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    /// Dataset file(s); several are pooled into one record.
    #[arg(long = "in", value_name = "PATH", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Raw vacuum record used to calibrate raw inputs.
    #[arg(long, value_name = "PATH")]
    pub vacuum_ref: Option<PathBuf>,
    #[arg(long, default_value_t = vogellab::analysis::DEFAULT_NU_MAX)]
    pub nu_max: f64,
    #[arg(long, default_value_t = vogellab::analysis::DEFAULT_NU_STEP)]
    pub nu_step: f64,
    /// Significance threshold in standard errors.
    #[arg(long, default_value_t = vogellab::analysis::DEFAULT_TEST_K)]
    pub k: f64,
    /// Write the JSON analysis report here.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Also score the variance against 1/4 + eta/2 for this photon fraction.
    #[arg(long)]
    pub eta_hypothesis: Option<f64>,
    /// Write the histogram as CSV here.
    #[arg(long, value_name = "PATH")]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 81)]
    pub bins: usize,
    /// Histogram covers [-range, range].
    #[arg(long, default_value_t = 2.0)]
    pub range: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct PlanArgs {
    /// A single photon fraction.
    #[arg(long, conflicts_with_all = ["eta_min", "eta_max", "step"])]
    pub eta: Option<f64>,
    #[arg(long, requires_all = ["eta_max", "step"])]
    pub eta_min: Option<f64>,
    #[arg(long, requires_all = ["eta_min", "step"])]
    pub eta_max: Option<f64>,
    #[arg(long, requires_all = ["eta_min", "eta_max"])]
    pub step: Option<f64>,
    #[arg(long, default_value_t = vogellab::analysis::DEFAULT_PLAN_K)]
    pub k: f64,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CurvesArgs {
    #[arg(long, value_parser = spec::parse_state)]
    pub state: StateSpec,
    #[arg(long, default_value_t = vogellab::analysis::DEFAULT_NU_MAX)]
    pub nu_max: f64,
    #[arg(long, default_value_t = vogellab::analysis::DEFAULT_NU_STEP)]
    pub nu_step: f64,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier `--manifest` run.
    pub path: PathBuf,
}

pub(crate) struct Ctx {
    start: Instant,
    argv: Vec<String>,
    manifest_path: Option<PathBuf>,
}

impl Ctx {
    pub(crate) fn manifest(
        &self,
        command: &str,
        params: &impl Serialize,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        seed: Option<u64>,
    ) -> RunManifest {
        RunManifest {
            tool: "vogellab".into(),
            tool_version: vogellab::VERSION.into(),
            command: command.into(),
            argv: self.argv.clone(),
            params: serde_json::to_value(params).expect("serializable parameters"),
            inputs,
            outputs,
            seed,
            duration_seconds: self.start.elapsed().as_secs_f64(),
        }
    }

    pub(crate) fn finish(&self, m: &RunManifest) -> anyhow::Result<()> {
        match &self.manifest_path {
            Some(p) => m.save(p),
            None => Ok(()),
        }
    }
}

fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => n,
            Err(_) => return usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'")),
        },
        Err(_) => 0,
    };
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let result = thread_pool().and_then(|pool| {
        let ctx = Ctx {
            start: Instant::now(),
            argv: strip_manifest_flag(&args[1.min(args.len())..]),
            manifest_path: cli.manifest.clone(),
        };
        // commands write into buffers so the pool closure stays Send
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let r = pool.install(|| dispatch(cli.command, &ctx, &mut o, &mut e));
        let _ = out.write_all(&o);
        let _ = err.write_all(&e);
        r
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn dispatch(command: Command, ctx: &Ctx, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Simulate(a) => commands::simulate(&a, ctx, out),
        Command::Analyze(a) => commands::analyze(&a, ctx, out),
        Command::Plan(a) => commands::plan(&a, ctx, out),
        Command::Curves(a) => commands::curves(&a, ctx, out),
        Command::Replay(a) => replay(&a, out, err),
    }
}

fn replay(a: &ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let m = RunManifest::load(&a.path)?;
    if m.argv.first().map(String::as_str) == Some("replay") {
        return usage("a manifest cannot replay another replay");
    }
    let args = std::iter::once("vogellab".to_string()).chain(m.argv.iter().cloned());
    match run(args, out, err) {
        EXIT_OK => Ok(()),
        EXIT_USAGE => usage(format!("replayed command '{}' was rejected", m.command)),
        _ => anyhow::bail!("replayed command '{}' failed", m.command),
    }
}
