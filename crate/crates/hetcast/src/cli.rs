//! Command-line interface. [`run`] executes a parsed [`Cli`]; the binary only
//! maps its result to an exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetcast_core::baselines::baseline_report;
use hetcast_core::optimizer::{optimize_scenario, LpOptions, DEFAULT_START_RIPPLE};
use hetcast_core::sim::SimParams;
use hetcast_core::{DEFAULT_CAP_MULTIPLIER, DEFAULT_GRID_STEP};
use serde_json::json;

use crate::config::{distribution_to_value, parse_fraction, ScenarioFile};
use crate::error::{Error, Result};
use crate::output;
use crate::runner::{
    average_runs_par, resolve, sweep, sweep_values, Choice, SchemeKind, SchemeSpec, SweepColumn,
    SweepOptions, DEFAULT_SCALE_STEP,
};

#[derive(Debug, Parser)]
#[command(
    name = "hetcast",
    version,
    about = "Coded broadcast to users with heterogeneous demands and erasure rates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize an LT degree distribution; writes JSON usable as --dist.
    Optimize(OptimizeArgs),
    /// Analytic per-user delivery times of one scheme, plus baselines.
    Analyze(SchemeCmdArgs),
    /// Monte-Carlo delivery times of one scheme.
    Simulate(SimulateArgs),
    /// Server delivery time of every scheme while one user's demand varies.
    Sweep(SweepArgs),
    /// Closed-form reference schemes.
    Baselines(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Transmission cap as a multiple of N.
    #[arg(long, default_value_t = DEFAULT_CAP_MULTIPLIER)]
    pub cap_multiplier: f64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Precede the coded packets with one uncoded round.
    #[arg(long)]
    pub systematic: bool,
    /// Override the maximum degree.
    #[arg(long)]
    pub dmax: Option<usize>,
    /// Expected degree-1 packets each user holds at delivery (nonsystematic).
    #[arg(long, default_value_t = DEFAULT_START_RIPPLE)]
    pub start_ripple: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Lt,
    LtSys,
    Growth,
    Chunked,
}

impl From<SchemeArg> for SchemeKind {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Lt => SchemeKind::Lt,
            SchemeArg::LtSys => SchemeKind::LtSystematic,
            SchemeArg::Growth => SchemeKind::Growth,
            SchemeArg::Chunked => SchemeKind::Chunked,
        }
    }
}

fn parse_choice<T: std::str::FromStr>(s: &str) -> std::result::Result<Choice<T>, String> {
    if s.eq_ignore_ascii_case("auto") {
        Ok(Choice::Auto)
    } else {
        s.parse()
            .map(Choice::Given)
            .map_err(|_| format!("expected a value or `auto`, found {s:?}"))
    }
}

fn parse_dist(s: &str) -> std::result::Result<Choice<PathBuf>, String> {
    Ok(if s.eq_ignore_ascii_case("auto") {
        Choice::Auto
    } else {
        Choice::Given(PathBuf::from(s))
    })
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    /// Degree distribution file for lt and lt-sys, or `auto` to optimize.
    #[arg(long, value_parser = parse_dist)]
    pub dist: Option<Choice<PathBuf>>,
    /// Growth-code scale factor, or `auto` to search.
    #[arg(long, value_parser = parse_choice::<f64>)]
    pub scale: Option<Choice<f64>>,
    /// Number of chunks, or `auto` to search.
    #[arg(long, value_parser = parse_choice::<usize>)]
    pub chunks: Option<Choice<usize>>,
    #[arg(long, default_value_t = DEFAULT_START_RIPPLE)]
    pub start_ripple: f64,
    #[arg(long, default_value_t = DEFAULT_SCALE_STEP)]
    pub scale_step: f64,
}

#[derive(Debug, Args)]
pub struct SchemeCmdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Also write mean decoded-fraction trajectories here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Index of the user whose demand varies.
    #[arg(long, default_value_t = 1)]
    pub user: usize,
    #[arg(long, default_value = "1/16", value_parser = parse_fraction)]
    pub from: f64,
    #[arg(long, default_value = "15/16", value_parser = parse_fraction)]
    pub to: f64,
    #[arg(long, default_value = "1/16", value_parser = parse_fraction)]
    pub step: f64,
    /// Comma-separated columns: lt, lt-sys, growth, chunked, lower_bound,
    /// unicast, timeshare.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "lt,lt-sys,growth,chunked,lower_bound,unicast,timeshare"
    )]
    pub schemes: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_START_RIPPLE)]
    pub start_ripple: f64,
    #[arg(long, default_value_t = DEFAULT_SCALE_STEP)]
    pub scale_step: f64,
}

fn check_common(c: &CommonArgs) -> Result<()> {
    if !(c.grid_step > 0.0 && c.grid_step < 1.0) {
        return Err(Error::usage(format!(
            "--grid-step {} outside (0, 1)",
            c.grid_step
        )));
    }
    if !(c.cap_multiplier > 0.0 && c.cap_multiplier.is_finite()) {
        return Err(Error::usage(format!(
            "--cap-multiplier {} must be positive",
            c.cap_multiplier
        )));
    }
    if c.runs == 0 {
        return Err(Error::usage("--runs must be at least 1"));
    }
    Ok(())
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn create(p: &Path) -> Result<File> {
    File::create(p).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", p.display()),
        ))
    })
}

fn load(c: &CommonArgs) -> Result<ScenarioFile> {
    check_common(c)?;
    Ok(ScenarioFile::load(&c.scenario)?)
}

fn spec(args: &SchemeArgs, grid_step: f64) -> SchemeSpec {
    SchemeSpec {
        kind: args.scheme.into(),
        dist: args.dist.clone(),
        scale: args.scale.clone(),
        chunks: args.chunks.clone(),
        grid_step,
        start_ripple: args.start_ripple,
        scale_step: args.scale_step,
    }
}

/// Executes a command. Console summaries go to standard error so that
/// standard output can carry data.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Optimize(a) => optimize(a),
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Baselines(c) => {
            let file = load(&c)?;
            let mut w = open_out(&c.out)?;
            output::write_baselines(&mut w, &baseline_report(&file.scenario))?;
            w.flush()?;
            Ok(())
        }
    }
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let file = load(&a.common)?;
    let mut opts = LpOptions::new(a.systematic)
        .grid_step(a.common.grid_step)
        .start_ripple(a.start_ripple);
    if let Some(d) = a.dmax {
        opts = opts.dmax(d);
    }
    let r = optimize_scenario(&file.scenario, &opts)?;
    let doc = json!({
        "t0": r.t0,
        "systematic": r.systematic,
        "dmax": r.dmax_used,
        "grid_step": a.common.grid_step,
        "start_ripple": if a.systematic { 0.0 } else { a.start_ripple },
        "degrees": distribution_to_value(&r.dist),
    });
    let mut w = open_out(&a.common.out)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    let degrees: Vec<String> = r
        .dist
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, p)| format!("p{}={p:.4}", i + 1))
        .collect();
    eprintln!(
        "t0 = {:.4} (dmax {}): {}",
        r.t0,
        r.dmax_used,
        degrees.join(" ")
    );
    Ok(())
}

fn analyze(a: SchemeCmdArgs) -> Result<()> {
    let file = load(&a.common)?;
    let s = spec(&a.scheme, a.common.grid_step);
    let r = resolve(&s, &file.scenario)?;
    let b = baseline_report(&file.scenario);
    let mut w = open_out(&a.common.out)?;
    output::write_analysis(
        &mut w,
        &file.scenario,
        &file.labels,
        s.kind.name(),
        &r.param,
        &r.analysis,
        Some(&b),
    )?;
    w.flush()?;
    eprintln!("{} {}: t0 = {:.4}", s.kind.name(), r.param, r.analysis.t0);
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let file = load(&a.common)?;
    let s = spec(&a.scheme, a.common.grid_step);
    let r = resolve(&s, &file.scenario)?;
    let params = SimParams {
        cap_multiplier: a.common.cap_multiplier,
        record_trajectories: a.trace.is_some(),
    };
    let summary = average_runs_par(
        &r.scheme,
        &file.scenario,
        &params,
        a.common.runs,
        a.common.seed,
    )?;
    let mut w = open_out(&a.common.out)?;
    output::write_simulation(
        &mut w,
        &file.scenario,
        &file.labels,
        s.kind.name(),
        &r.param,
        &summary,
    )?;
    w.flush()?;
    if let Some(p) = &a.trace {
        let mut tw = BufWriter::new(create(p)?);
        output::write_trace(&mut tw, &file.labels, &summary)?;
        tw.flush()?;
    }
    eprintln!(
        "{} {}: server mean {:.4} over {} runs ({} incomplete), analytic {:.4}",
        s.kind.name(),
        r.param,
        summary.server_mean,
        summary.runs - summary.incomplete,
        summary.incomplete,
        r.analysis.t0
    );
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let file = load(&a.common)?;
    let columns = a
        .schemes
        .iter()
        .map(|s| {
            SweepColumn::parse(s.trim())
                .ok_or_else(|| Error::usage(format!("--schemes: unknown column {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let opts = SweepOptions {
        user: a.user,
        values: sweep_values(a.from, a.to, a.step)?,
        columns,
        grid_step: a.common.grid_step,
        start_ripple: a.start_ripple,
        scale_step: a.scale_step,
    };
    let points = sweep(&file.scenario, &opts)?;
    let mut w = open_out(&a.common.out)?;
    output::write_sweep(&mut w, &points)?;
    w.flush()?;
    Ok(())
}
