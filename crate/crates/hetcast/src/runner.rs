//! Scheme resolution and the parallel experiment drivers.
//!
//! Runs and sweep points execute on the rayon pool. Results are collected in
//! index order, so outputs do not depend on scheduling.

use std::path::PathBuf;

use hetcast_core::baselines::{lower_bound, timeshare_delivery, unicast_total};
use hetcast_core::chunked::{
    best_chunk_size, chunked_analysis, ChunkConfig, FieldSize, DEFAULT_QUAD_TOL,
};
use hetcast_core::degree_model::server_delivery_time;
use hetcast_core::growth::{best_scale, growth_analysis, GrowthSchedule};
use hetcast_core::optimizer::{optimize_scenario, LpOptions, DEFAULT_START_RIPPLE};
use hetcast_core::sim::{run_seed, simulate, RunSummary, Scheme, SimParams};
use hetcast_core::{AnalysisResult, DegreeDistribution, Scenario};
use rayon::prelude::*;

use crate::config::load_distribution;
use crate::error::{Error, Result};

/// Spacing of the growth scale search.
pub const DEFAULT_SCALE_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Lt,
    LtSystematic,
    Growth,
    Chunked,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Lt => "lt",
            SchemeKind::LtSystematic => "lt-sys",
            SchemeKind::Growth => "growth",
            SchemeKind::Chunked => "chunked",
        }
    }
}

/// A parameter given explicitly or left to a search.
#[derive(Debug, Clone, PartialEq)]
pub enum Choice<T> {
    Auto,
    Given(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    /// Distribution file for the LT schemes; `Auto` optimizes one.
    pub dist: Option<Choice<PathBuf>>,
    pub scale: Option<Choice<f64>>,
    /// Number of chunks.
    pub chunks: Option<Choice<usize>>,
    pub grid_step: f64,
    pub start_ripple: f64,
    pub scale_step: f64,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind) -> Self {
        Self {
            kind,
            dist: None,
            scale: None,
            chunks: None,
            grid_step: hetcast_core::DEFAULT_GRID_STEP,
            start_ripple: DEFAULT_START_RIPPLE,
            scale_step: DEFAULT_SCALE_STEP,
        }
    }

    /// Checks that exactly the parameters of `kind` are present.
    pub fn validate(&self) -> Result<()> {
        let name = self.kind.name();
        let needs = |present: bool, flag: &str, what: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::usage(format!(
                    "--scheme {name} requires {flag} ({what})"
                )))
            }
        };
        let rejects = |present: bool, flag: &str| {
            if present {
                Err(Error::usage(format!(
                    "{flag} does not apply to --scheme {name}"
                )))
            } else {
                Ok(())
            }
        };
        match self.kind {
            SchemeKind::Lt | SchemeKind::LtSystematic => {
                needs(
                    self.dist.is_some(),
                    "--dist",
                    "a distribution file or `auto`",
                )?;
                rejects(self.scale.is_some(), "--scale")?;
                rejects(self.chunks.is_some(), "--chunks")
            }
            SchemeKind::Growth => {
                needs(self.scale.is_some(), "--scale", "a factor or `auto`")?;
                rejects(self.dist.is_some(), "--dist")?;
                rejects(self.chunks.is_some(), "--chunks")
            }
            SchemeKind::Chunked => {
                needs(self.chunks.is_some(), "--chunks", "a chunk count or `auto`")?;
                rejects(self.dist.is_some(), "--dist")?;
                rejects(self.scale.is_some(), "--scale")
            }
        }
    }
}

/// A concrete scheme with its analytic prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub scheme: Scheme,
    pub analysis: AnalysisResult,
    /// Human-readable parameter summary for output rows.
    pub param: String,
}

fn lt_resolved(
    dist: DegreeDistribution,
    scenario: &Scenario,
    systematic: bool,
    step: f64,
    param: String,
) -> Result<Resolved> {
    let analysis = server_delivery_time(&dist, scenario, systematic, step)?;
    let scheme = if systematic {
        Scheme::LtSystematic(dist)
    } else {
        Scheme::Lt(dist)
    };
    Ok(Resolved {
        scheme,
        analysis,
        param,
    })
}

pub fn growth_resolved(scenario: &Scenario, scale: f64, step: f64) -> Result<Resolved> {
    let schedule = GrowthSchedule::new(scenario.n, scale, scenario.z_max())?;
    let analysis = growth_analysis(&schedule, scenario, step)?;
    Ok(Resolved {
        scheme: Scheme::Growth(schedule),
        analysis,
        param: format!("scale={scale}"),
    })
}

pub fn chunked_resolved(scenario: &Scenario, h: usize) -> Result<Resolved> {
    let config = ChunkConfig::for_packets(scenario.n, h, FieldSize::Gf256)?;
    let analysis = chunked_analysis(scenario, &config, DEFAULT_QUAD_TOL)?;
    Ok(Resolved {
        param: format!("chunks={};h={h}", config.chunks()),
        scheme: Scheme::Chunked(config),
        analysis,
    })
}

/// Builds a concrete scheme, running the optimizer or the parameter searches
/// for parameters given as `auto`.
pub fn resolve(spec: &SchemeSpec, scenario: &Scenario) -> Result<Resolved> {
    spec.validate()?;
    let step = spec.grid_step;
    match spec.kind {
        SchemeKind::Lt | SchemeKind::LtSystematic => {
            let systematic = spec.kind == SchemeKind::LtSystematic;
            match spec.dist.as_ref().expect("validated") {
                Choice::Given(path) => {
                    let dist = load_distribution(path)?;
                    lt_resolved(
                        dist,
                        scenario,
                        systematic,
                        step,
                        format!("dist={}", path.display()),
                    )
                }
                Choice::Auto => {
                    let opts = LpOptions::new(systematic)
                        .grid_step(step)
                        .start_ripple(spec.start_ripple);
                    let opt = optimize_scenario(scenario, &opts)?;
                    lt_resolved(
                        opt.dist,
                        scenario,
                        systematic,
                        step,
                        format!("dmax={}", opt.dmax_used),
                    )
                }
            }
        }
        SchemeKind::Growth => {
            let scale = match spec.scale.as_ref().expect("validated") {
                Choice::Given(s) => *s,
                Choice::Auto => best_scale(scenario, spec.scale_step, step)?.scale,
            };
            growth_resolved(scenario, scale, step)
        }
        SchemeKind::Chunked => {
            let h = match spec.chunks.as_ref().expect("validated") {
                Choice::Given(c) => {
                    if *c == 0 || !scenario.n.is_multiple_of(*c) {
                        return Err(Error::usage(format!(
                            "--chunks {c} does not divide N = {}",
                            scenario.n
                        )));
                    }
                    scenario.n / c
                }
                Choice::Auto => best_chunk_size(scenario, DEFAULT_QUAD_TOL)?.h,
            };
            chunked_resolved(scenario, h)
        }
    }
}

/// Parallel counterpart of [`hetcast_core::sim::average_runs`] with identical
/// results.
pub fn average_runs_par(
    scheme: &Scheme,
    scenario: &Scenario,
    params: &SimParams,
    runs: usize,
    master_seed: u64,
) -> Result<RunSummary> {
    if runs == 0 {
        return Err(Error::usage("--runs must be at least 1"));
    }
    let traces = (0..runs as u64)
        .into_par_iter()
        .map(|r| simulate(scheme, scenario, params, run_seed(master_seed, r)))
        .collect::<hetcast_core::Result<Vec<_>>>()?;
    Ok(RunSummary::from_traces(scenario, master_seed, &traces))
}

/// Columns of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepColumn {
    Lt,
    LtSystematic,
    Growth,
    Chunked,
    LowerBound,
    Unicast,
    Timeshare,
}

impl SweepColumn {
    pub const ALL: [SweepColumn; 7] = [
        SweepColumn::Lt,
        SweepColumn::LtSystematic,
        SweepColumn::Growth,
        SweepColumn::Chunked,
        SweepColumn::LowerBound,
        SweepColumn::Unicast,
        SweepColumn::Timeshare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepColumn::Lt => "lt",
            SweepColumn::LtSystematic => "lt-sys",
            SweepColumn::Growth => "growth",
            SweepColumn::Chunked => "chunked",
            SweepColumn::LowerBound => "lower_bound",
            SweepColumn::Unicast => "unicast",
            SweepColumn::Timeshare => "timeshare",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Index of the user whose demand varies.
    pub user: usize,
    pub values: Vec<f64>,
    pub columns: Vec<SweepColumn>,
    pub grid_step: f64,
    pub start_ripple: f64,
    pub scale_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub z: f64,
    pub column: SweepColumn,
    pub t_server: f64,
    pub param: String,
}

/// `from, from + step, ...` up to `to` inclusive, tolerant to rounding.
pub fn sweep_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::usage(format!("sweep step {step} must be positive")));
    }
    if !(from > 0.0 && to < 1.0 && from <= to) {
        return Err(Error::usage(format!(
            "sweep range [{from}, {to}] must satisfy 0 < from <= to < 1"
        )));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| from + k as f64 * step).collect())
}

fn sweep_column(
    column: SweepColumn,
    scenario: &Scenario,
    opts: &SweepOptions,
) -> Result<(f64, String)> {
    let lp = |systematic: bool| -> Result<(f64, String)> {
        let o = LpOptions::new(systematic)
            .grid_step(opts.grid_step)
            .start_ripple(opts.start_ripple);
        let r = optimize_scenario(scenario, &o)?;
        Ok((r.t0, format!("dmax={}", r.dmax_used)))
    };
    match column {
        SweepColumn::Lt => lp(false),
        SweepColumn::LtSystematic => lp(true),
        SweepColumn::Growth => {
            let c = best_scale(scenario, opts.scale_step, opts.grid_step)?;
            Ok((c.analysis.t0, format!("scale={}", c.scale)))
        }
        SweepColumn::Chunked => {
            let c = best_chunk_size(scenario, DEFAULT_QUAD_TOL)?;
            Ok((
                c.analysis.t0,
                format!("chunks={};h={}", scenario.n / c.h, c.h),
            ))
        }
        SweepColumn::LowerBound => Ok((lower_bound(scenario), String::new())),
        SweepColumn::Unicast => Ok((unicast_total(scenario), String::new())),
        SweepColumn::Timeshare => Ok((timeshare_delivery(scenario), String::new())),
    }
}

/// Re-evaluates every column with the demand of `opts.user` set to each
/// value. Rows come out ordered by value, then by column as listed.
pub fn sweep(base: &Scenario, opts: &SweepOptions) -> Result<Vec<SweepPoint>> {
    if opts.user >= base.users.len() {
        return Err(Error::usage(format!(
            "--user {} out of range for {} users",
            opts.user,
            base.users.len()
        )));
    }
    let jobs: Vec<(f64, SweepColumn)> = opts
        .values
        .iter()
        .flat_map(|&z| opts.columns.iter().map(move |&c| (z, c)))
        .collect();
    jobs.into_par_iter()
        .map(|(z, column)| {
            let mut scenario = base.clone();
            scenario.users[opts.user].z = z;
            let (t_server, param) = sweep_column(column, &scenario, opts)?;
            Ok(SweepPoint {
                z,
                column,
                t_server,
                param,
            })
        })
        .collect()
}
