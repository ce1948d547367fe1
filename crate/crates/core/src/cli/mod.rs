//! Command-line front end. Every command builds a [`Report`] from library
//! calls; the binary only parses, renders and maps the outcome to an exit
//! code.

mod args;
mod commands;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dynamics::{EngineKind, Mu};
use crate::error::{Error, Result};
use crate::graph::GraphKind;
use crate::sinks1d::FieldMode;

pub use args::{parse_horizon, parse_list, List, RatesArg, FIELD_STREAM};
pub use report::{Check, Format, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "coopruin",
    version,
    about = "Earn/spend/cooperate wealth dynamics on graphs: simulation, closed forms and checks",
    long_about = "Earn/spend/cooperate wealth dynamics on graphs: simulation, closed forms and checks.\n\n\
Rates (--phi) use `point:v`, `two:a,p,b`, `uniform:lo,hi`, `exp:rate`, `gamma:k,theta`, \
explicit `list:v1,v2,...` or `csv:path`. Graphs use `path:n`, `cycle:n`, `complete:n`, \
`grid:WxH`, `star:n` or `file:path`. Cooperation rates accept `inf`.\n\n\
Exit codes: 0 success, 1 usage or invalid input, 2 a reported check failed."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Master seed; replica k uses stream k of this seed.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global survival probability by Monte Carlo, next to the closed form.
    ///
    /// CSV columns: target,point,ci_low,ci_high,n,censored,bracket_low,
    /// bracket_high,analytic,analytic_kind.
    Survival(SurvivalArgs),
    /// Two agents on one edge: exit laws and expected survivors.
    ///
    /// CSV columns: quantity,closed_form,exact,mc,ci_low,ci_high,
    /// closed_form_within_3sigma,exact_within_3sigma.
    TwoPerson(TwoPersonArgs),
    /// Sink density and death density on a ring.
    ///
    /// CSV columns: c,death_density,death_se,sink_density,sink_se,
    /// sinks_dead,dominates.
    Sinks(SinksArgs),
    /// Gambler's ruin of the total fortune.
    ///
    /// CSV columns: quantity,closed_form,oracle,abs_diff.
    Ruin(RuinArgs),
    /// One replica: event log (json, one object per line) or snapshots (csv).
    Trajectory(TrajectoryArgs),
    /// Survival with and without cooperation as the initial fortune grows.
    ///
    /// CSV columns: c,ln_fail_no_coop,ln_fail_bound_coop,no_coop_below_bound.
    Compare(CompareArgs),
    /// Mean of phi_bar^-Z at fixed times, Z the total fortune stopped at the
    /// first death.
    ///
    /// CSV columns: t,mean,std_error,initial,z_score.
    Martingale(MartingaleArgs),
    /// Two-sample KS test of first-death times from both engines.
    ///
    /// CSV columns: engine,replicas,mean,median,censored.
    Engines(EnginesArgs),
    /// Origin death under clocks conditioned on the local ruin event.
    ///
    /// CSV columns: mu,samples,dead_at_one.
    EventA(EventAArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SurvivalArgs {
    #[arg(long)]
    pub graph: GraphKind,
    #[arg(long)]
    pub phi: RatesArg,
    #[arg(long)]
    pub c: u64,
    #[arg(long)]
    pub mu: Mu,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,
    #[arg(long, value_parser = parse_horizon, default_value = "inf")]
    pub tmax: f64,
    /// Miss probability tolerated per survival certificate.
    #[arg(long, default_value_t = crate::montecarlo::stopping::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value = "rate")]
    pub engine: EngineKind,
    /// Clock rings per replica before it is counted as censored.
    #[arg(long, default_value_t = 10_000_000)]
    pub max_events: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TwoPersonArgs {
    #[arg(long)]
    pub phi_x: f64,
    #[arg(long)]
    pub phi_y: f64,
    #[arg(long)]
    pub c: u64,
    /// Zero skips the Monte Carlo columns.
    #[arg(long, default_value_t = 100_000)]
    pub replicas: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SinksArgs {
    #[arg(long)]
    pub phi: FieldSpecArg,
    #[arg(long, default_value_t = 2001)]
    pub ring: usize,
    /// Initial fortunes, comma separated.
    #[arg(long, default_value = "1")]
    pub c: List<u64>,
    #[arg(long, default_value = "1")]
    pub mu: Mu,
    #[arg(long, value_parser = parse_horizon, default_value = "500")]
    pub tmax: f64,
    #[arg(long, default_value_t = 16)]
    pub replicas: u64,
    /// Sink margin; defaults to (1 - E(phi)) / 2.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Largest window length checked by the sink test.
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
    /// Extra times for the dead fraction of sinks, comma separated.
    #[arg(long)]
    pub checkpoints: Option<List<f64>>,
    #[arg(long, value_enum, default_value_t = ModeArg::Annealed)]
    pub mode: ModeArg,
    /// Per-vertex CSV (index,phi,right_sink,left_sink,eps_sink,coins) of the
    /// first replica at the first c.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

/// A distribution only (no explicit rate list).
pub type FieldSpecArg = crate::field::FieldSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Annealed,
    Quenched,
}

impl From<ModeArg> for FieldMode {
    fn from(m: ModeArg) -> FieldMode {
        match m {
            ModeArg::Annealed => FieldMode::Annealed,
            ModeArg::Quenched => FieldMode::Quenched,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RuinArgs {
    #[arg(long)]
    pub phi_bar: f64,
    #[arg(long)]
    pub start: i64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub lower: i64,
    /// Omit for the one-sided (never hit) probability.
    #[arg(long)]
    pub upper: Option<i64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub graph: GraphKind,
    #[arg(long)]
    pub phi: RatesArg,
    #[arg(long)]
    pub c: u64,
    #[arg(long)]
    pub mu: Mu,
    #[arg(long, value_parser = parse_horizon, default_value = "10")]
    pub tmax: f64,
    #[arg(long, default_value = "rate")]
    pub engine: EngineKind,
    /// Snapshot spacing for csv output.
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub graph: GraphKind,
    #[arg(long)]
    pub phi: RatesArg,
    #[arg(long, default_value_t = 10_000)]
    pub c_max: u64,
}

#[derive(Debug, Clone, Args)]
pub struct MartingaleArgs {
    #[arg(long)]
    pub graph: GraphKind,
    #[arg(long)]
    pub phi: RatesArg,
    #[arg(long)]
    pub c: u64,
    #[arg(long, default_value = "1")]
    pub mu: Mu,
    #[arg(long, default_value = "0,1,2,4")]
    pub times: List<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub replicas: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EnginesArgs {
    #[arg(long)]
    pub graph: GraphKind,
    #[arg(long)]
    pub phi: RatesArg,
    #[arg(long)]
    pub c: u64,
    #[arg(long, default_value = "1")]
    pub mu: Mu,
    #[arg(long, value_parser = parse_horizon, default_value = "1000")]
    pub tmax: f64,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EventAArgs {
    #[arg(long)]
    pub phi: FieldSpecArg,
    #[arg(long, default_value_t = 1)]
    pub c: u64,
    /// Window half-width; defaults to c + 3.
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long, default_value = "0,1,inf")]
    pub mu: List<Mu>,
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    /// Also estimate the probability of the event from this many
    /// unconditioned draws.
    #[arg(long, default_value_t = 0)]
    pub estimate_samples: u64,
}

/// Runs a parsed command and returns its report.
pub fn execute(cli: &Cli) -> Result<Report> {
    let seed = cli.global.seed;
    match &cli.command {
        Command::Survival(a) => commands::survival(a, seed),
        Command::TwoPerson(a) => commands::two_person(a, seed),
        Command::Sinks(a) => commands::sinks(a, seed),
        Command::Ruin(a) => commands::ruin(a),
        Command::Compare(a) => commands::compare(a, seed),
        Command::Martingale(a) => commands::martingale(a, seed),
        Command::Engines(a) => commands::engines(a, seed),
        Command::EventA(a) => commands::event_a(a, seed),
        Command::Trajectory(_) => Err(Error::InvalidParameter(
            "trajectory writes a raw stream, use run".into(),
        )),
    }
}

fn emit(global: &GlobalOpts, text: &str) -> Result<()> {
    match &global.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn run_parsed(cli: &Cli) -> Result<i32> {
    if let Command::Trajectory(a) = &cli.command {
        let text = commands::trajectory(a, cli.global.seed, cli.global.format)?;
        emit(&cli.global, &text)?;
        return Ok(EXIT_OK);
    }
    let report = execute(cli)?;
    // Text output already carries the warnings; avoid printing them twice.
    if cli.global.format != Format::Text || cli.global.out.is_some() {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
    }
    emit(&cli.global, &report.render(cli.global.format))?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
