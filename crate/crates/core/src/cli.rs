//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning                                                  |
//! |------|----------------------------------------------------------|
//! | 0    | success                                                  |
//! | 1    | internal error (a library contract was broken)           |
//! | 2    | usage error                                              |
//! | 3    | environment inconsistency                                |
//! | 4    | arithmetic capacity (reserved, coordinates are unbounded) |
//! | 5    | I/O failure                                              |
//! | 6    | `diagnose` found a failing check                         |

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::environment::{BudgetSchedule, Objective, OracleKind, OracleSpec, Shape};
use crate::error::Error;
use crate::harness::{self, diagnostics, theorem_bound, RunConfig, ScalingTable, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;
pub const EXIT_ARITHMETIC: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_DIAGNOSTICS: i32 = 6;

pub const CSV_HEADER: &str =
    "t,budget,x,J_lo,J_hi,epoch,active_lo,active_hi,inst_regret,cum_regret,x_frac,active_lo_frac,active_hi_frac";

#[derive(Debug, Parser)]
#[command(name = "dyadic-search", version, about = "Dyadic Search regret simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its trace and summary.
    Run(RunArgs),
    /// Run the same experiment at several horizons and compare with the bound.
    Scaling(ScalingArgs),
    /// Run one experiment and report the structural checks.
    Diagnose(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Abs,
    Quadratic,
    Pwl,
    Softplus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleArg {
    Centered,
    FullWidthCentered,
    Lower,
    Upper,
    Shrink,
    Lying,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Constant,
    Cyclic,
    Random,
}

#[derive(Debug, Args)]
struct EnvArgs {
    #[arg(long, value_enum, default_value = "abs")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    xstar: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    domain_lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    domain_hi: f64,
    #[arg(long, value_enum, default_value = "centered")]
    oracle: OracleArg,
    /// First round at which the lying oracle lies.
    #[arg(long, default_value_t = 1)]
    lie_from: u64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "constant")]
    schedule: ScheduleArg,
    /// Constant: one value. Cyclic: the cycle. Random: `lo,hi`.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    budget: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long = "T", default_value_t = 10_000)]
    horizon: u64,
    /// Per-round CSV trace.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary file; stdout when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Do not keep per-round rows (no CSV, no diagnostics).
    #[arg(long)]
    no_trace: bool,
}

#[derive(Debug, Args)]
struct ScalingArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    horizons: Vec<u64>,
    /// CSV of `T,R_T,bound`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Run,
    Scaling,
    Diagnose,
}

/// Validated command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: CommandKind,
    pub run: RunConfig,
    /// Horizons of a scaling command; `[run.horizon]` otherwise.
    pub horizons: Vec<u64>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("diagnostics failed: {0}")]
    Diagnostics(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => EXIT_OK,
            CliError::Clap(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(Error::Inconsistent { .. } | Error::EmptyIntersection(..)) => EXIT_INCONSISTENT,
            CliError::Run(Error::Config(_)) => EXIT_USAGE,
            CliError::Run(_) => EXIT_INTERNAL,
            CliError::Io { .. } => EXIT_IO,
            CliError::Diagnostics(_) => EXIT_DIAGNOSTICS,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

impl EnvArgs {
    fn build(&self, horizon: u64) -> Result<RunConfig, CliError> {
        let shape = match self.objective {
            ObjectiveArg::Abs => Shape::AbsoluteValue,
            ObjectiveArg::Quadratic => Shape::Quadratic,
            ObjectiveArg::Pwl => Shape::PiecewiseLinearMax,
            ObjectiveArg::Softplus => Shape::SoftplusLike,
        };
        let kind = match self.oracle {
            OracleArg::Centered => OracleKind::Centered,
            OracleArg::FullWidthCentered => OracleKind::FullWidthCentered,
            OracleArg::Lower => OracleKind::LowerAnchored,
            OracleArg::Upper => OracleKind::UpperAnchored,
            OracleArg::Shrink => OracleKind::ShrinkOnly,
            OracleArg::Lying => OracleKind::Lying { from_round: self.lie_from },
        };
        let schedule = match (self.schedule, self.budget.as_slice()) {
            (ScheduleArg::Constant, &[b]) => BudgetSchedule::Constant(b),
            (ScheduleArg::Cyclic, values) => BudgetSchedule::Cyclic(values.to_vec()),
            (ScheduleArg::Random, &[lo, hi]) => BudgetSchedule::SeededRandom { lo, hi, seed: self.seed },
            (ScheduleArg::Constant, _) => return Err(CliError::Usage("--budget takes one value for a constant schedule".into())),
            (ScheduleArg::Random, _) => return Err(CliError::Usage("--budget takes `lo,hi` for a random schedule".into())),
        };
        let usage = |e: Error| CliError::Usage(e.to_string());
        let objective = Objective::new(shape, self.xstar, self.scale, (self.domain_lo, self.domain_hi)).map_err(usage)?;
        let oracle = OracleSpec::new(kind, self.c, self.alpha).map_err(usage)?;
        RunConfig::new(objective, oracle, schedule, horizon).map_err(usage)
    }
}

pub fn parse_config<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    match cli.command {
        Command::Run(args) | Command::Diagnose(args) if args.no_trace && args.out.is_some() => {
            Err(CliError::Usage("--out needs the per-round trace; drop --no-trace".into()))
        }
        Command::Run(args) => run_config(CommandKind::Run, args),
        Command::Diagnose(args) => {
            if args.no_trace {
                return Err(CliError::Usage("diagnose needs the per-round trace; drop --no-trace".into()));
            }
            run_config(CommandKind::Diagnose, args)
        }
        Command::Scaling(args) => {
            if args.horizons.is_empty() || args.horizons[0] == 0 || args.horizons.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Usage("--horizons must be positive and strictly ascending".into()));
            }
            let run = args.env.build(args.horizons[0])?.with_full_trace(false);
            Ok(CliConfig {
                command: CommandKind::Scaling,
                run,
                horizons: args.horizons,
                out: args.out,
                summary: args.summary,
            })
        }
    }
}

fn run_config(command: CommandKind, args: RunArgs) -> Result<CliConfig, CliError> {
    let run = args.env.build(args.horizon)?.with_full_trace(!args.no_trace);
    Ok(CliConfig { command, run, horizons: vec![args.horizon], out: args.out, summary: args.summary })
}

/// Floats in traces and summaries: 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv_to<W: Write>(trace: &Trace, lo: f64, hi: f64, mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.t,
            num(row.budget),
            num(row.query_x),
            num(row.response.lo()),
            num(row.response.hi()),
            row.epoch,
            num(row.active.lo().denormalize(lo, hi)),
            num(row.active.hi().denormalize(lo, hi)),
            num(row.inst_regret),
            num(row.cum_regret),
            row.query,
            row.active.lo(),
            row.active.hi(),
        )?;
    }
    w.flush()
}

/// Writes the per-round trace. Decimal coordinates are in the user's domain
/// `[lo, hi]`; the `*_frac` columns are the exact normalized positions.
pub fn write_csv(trace: &Trace, lo: f64, hi: f64, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_csv_to(trace, lo, hi, BufWriter::new(file)).map_err(io_err(path))
}

/// Summary of a finished (or failed) run.
pub fn emit_summary<W: Write>(config: &RunConfig, outcome: &Result<Trace, Error>, mut w: W) -> io::Result<()> {
    writeln!(w, "T: {}", config.horizon)?;
    let trace = match outcome {
        Ok(trace) => trace,
        Err(e) => {
            writeln!(w, "error: {e}")?;
            if let Some(round) = e.failing_round() {
                writeln!(w, "failed_round: {round}")?;
            }
            return w.flush();
        }
    };
    let (lo, hi) = config.objective.domain();
    let range = config.objective.min().range;
    writeln!(w, "total_budget: {}", trace.total_budget)?;
    writeln!(w, "R_T: {}", num(trace.cumulative_regret))?;
    if config.bound_premises_hold() {
        let bound = theorem_bound(config.horizon, config.oracle.alpha(), config.oracle.c(), range);
        writeln!(w, "bound: {}", num(bound))?;
        let verdict = if trace.cumulative_regret <= bound { "PASS" } else { "FAIL" };
        writeln!(w, "R_T ≤ bound: {verdict}")?;
    } else {
        writeln!(w, "bound: n/a: premises not met")?;
    }
    let active = &trace.final_active;
    writeln!(
        w,
        "final_active: [{}, {}] ({})",
        num(active.lo().denormalize(lo, hi)),
        num(active.hi().denormalize(lo, hi)),
        active
    )?;
    writeln!(w, "final_kind: {}", trace.final_kind)?;
    writeln!(w, "epochs: {}", trace.final_epoch)?;
    if trace.rows.is_empty() {
        writeln!(w, "diagnostics: n/a (no per-round trace)")?;
    } else {
        for (check, outcome) in diagnostics(trace, config).results {
            writeln!(w, "diagnostics.{}: {outcome}", check.name())?;
        }
    }
    w.flush()
}

pub fn write_scaling_to<W: Write>(table: &ScalingTable, mut w: W) -> io::Result<()> {
    writeln!(w, "T,R_T,bound")?;
    for row in &table.rows {
        let bound = row.bound.map_or_else(|| "n/a".to_string(), num);
        writeln!(w, "{},{},{}", row.horizon, num(row.regret), bound)?;
    }
    w.flush()
}

fn with_output<F>(path: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(io_err(p))?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(io_err(p))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

pub fn execute(config: &CliConfig) -> Result<(), CliError> {
    let (lo, hi) = config.run.objective.domain();
    match config.command {
        CommandKind::Run => {
            let outcome = harness::run(&config.run);
            with_output(config.summary.as_deref(), |w| emit_summary(&config.run, &outcome, w))?;
            let trace = outcome?;
            if let Some(path) = &config.out {
                write_csv(&trace, lo, hi, path)?;
            }
            Ok(())
        }
        CommandKind::Diagnose => {
            let trace = harness::run(&config.run)?;
            if let Some(path) = &config.out {
                write_csv(&trace, lo, hi, path)?;
            }
            let report = diagnostics(&trace, &config.run);
            with_output(config.summary.as_deref(), |w| {
                for (check, outcome) in &report.results {
                    writeln!(w, "{}: {outcome}", check.name())?;
                }
                Ok(())
            })?;
            let failure = report.failures().next().map(|(check, outcome)| format!("{}: {outcome}", check.name()));
            match failure {
                None => Ok(()),
                Some(why) => Err(CliError::Diagnostics(why)),
            }
        }
        CommandKind::Scaling => {
            let table = harness::scaling_experiment(&config.run, &config.horizons)?;
            if let Some(path) = &config.out {
                let file = File::create(path).map_err(io_err(path))?;
                write_scaling_to(&table, BufWriter::new(file)).map_err(io_err(path))?;
            }
            with_output(config.summary.as_deref(), |w| {
                write_scaling_to(&table, &mut *w)?;
                writeln!(w, "slope: {}", num(table.slope))?;
                let all_within = table.rows.iter().all(|r| r.bound.is_none_or(|b| r.regret <= b));
                writeln!(w, "R_T ≤ bound: {}", if all_within { "PASS" } else { "FAIL" })
            })
        }
    }
}

/// Parses, runs, and reports; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_config(argv).and_then(|config| execute(&config));
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("dyadic-search: {e}");
            e.exit_code()
        }
    }
}
