//! CSV outputs. Every table starts with a header row; user rows are followed
//! by a `server` row holding the maximum over users. Times are normalized by
//! `N`. Unreachable times print as `inf`; empty cells mean "not applicable".

use std::io::Write;

use hetcast_core::baselines::BaselineReport;
use hetcast_core::sim::RunSummary;
use hetcast_core::{AnalysisResult, Scenario};
use serde::Serialize;

use crate::runner::SweepPoint;

/// `user,z,eps` identity of an output row.
fn user_cells(scenario: &Scenario, i: Option<usize>) -> (String, Option<f64>, Option<f64>) {
    match i {
        Some(i) => (
            i.to_string(),
            Some(scenario.users[i].z),
            Some(scenario.users[i].eps),
        ),
        None => ("server".into(), None, None),
    }
}

fn label_of(labels: &[Option<String>], i: Option<usize>) -> String {
    i.and_then(|i| labels.get(i).cloned().flatten())
        .unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct AnalysisRow<'a> {
    scheme: &'a str,
    user: String,
    z: Option<f64>,
    eps: Option<f64>,
    t_analytic: f64,
    param: &'a str,
    label: String,
}

/// `scheme,user,z,eps,t_analytic,param,label`. The scheme block is followed
/// by one `server` row per baseline when `baselines` is given.
pub fn write_analysis<W: Write>(
    w: W,
    scenario: &Scenario,
    labels: &[Option<String>],
    scheme: &str,
    param: &str,
    analysis: &AnalysisResult,
    baselines: Option<&BaselineReport>,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let users = (0..scenario.users.len())
        .map(Some)
        .chain(std::iter::once(None));
    for i in users {
        let (user, z, eps) = user_cells(scenario, i);
        out.serialize(AnalysisRow {
            scheme,
            user,
            z,
            eps,
            t_analytic: i.map_or(analysis.t0, |i| analysis.per_user[i]),
            param,
            label: label_of(labels, i),
        })?;
    }
    if let Some(b) = baselines {
        for (name, t) in baseline_rows(b) {
            out.serialize(AnalysisRow {
                scheme: name,
                user: "server".into(),
                z: None,
                eps: None,
                t_analytic: t,
                param: "",
                label: String::new(),
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

fn baseline_rows(b: &BaselineReport) -> [(&'static str, f64); 3] {
    [
        ("lower_bound", b.lower_bound),
        ("unicast", b.unicast_total),
        ("timeshare", b.timeshare),
    ]
}

#[derive(Debug, Serialize)]
struct BaselineRow {
    baseline: &'static str,
    t_server: f64,
}

/// `baseline,t_server`.
pub fn write_baselines<W: Write>(w: W, report: &BaselineReport) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (baseline, t_server) in baseline_rows(report) {
        out.serialize(BaselineRow { baseline, t_server })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimRow<'a> {
    scheme: &'a str,
    user: String,
    z: Option<f64>,
    eps: Option<f64>,
    t_sim_mean: f64,
    t_sim_std: f64,
    runs: usize,
    incomplete_runs: usize,
    param: &'a str,
    label: String,
}

/// `scheme,user,z,eps,t_sim_mean,t_sim_std,runs,incomplete_runs,param,label`.
/// The `server` row summarizes `max_i T_i / N` per run, which is not the
/// maximum of the per-user means.
pub fn write_simulation<W: Write>(
    w: W,
    scenario: &Scenario,
    labels: &[Option<String>],
    scheme: &str,
    param: &str,
    summary: &RunSummary,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let users = (0..scenario.users.len())
        .map(Some)
        .chain(std::iter::once(None));
    for i in users {
        let (user, z, eps) = user_cells(scenario, i);
        let (mean, std) = match i {
            Some(i) => (summary.per_user_mean[i], summary.per_user_std[i]),
            None => (summary.server_mean, summary.server_std),
        };
        out.serialize(SimRow {
            scheme,
            user,
            z,
            eps,
            t_sim_mean: mean,
            t_sim_std: std,
            runs: summary.runs,
            incomplete_runs: summary.incomplete,
            param,
            label: label_of(labels, i),
        })?;
    }
    out.flush()?;
    Ok(())
}

/// `transmission_index` followed by one mean decoded-fraction column per
/// user, named by label when available.
pub fn write_trace<W: Write>(
    w: W,
    labels: &[Option<String>],
    summary: &RunSummary,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["transmission_index".to_string()];
    header.extend((0..summary.mean_trajectories.len()).map(|i| {
        labels
            .get(i)
            .cloned()
            .flatten()
            .unwrap_or_else(|| format!("user{i}"))
    }));
    out.write_record(&header)?;
    let len = summary.mean_trajectories.first().map_or(0, Vec::len);
    for t in 0..len {
        let mut rec = vec![(t + 1).to_string()];
        rec.extend(
            summary
                .mean_trajectories
                .iter()
                .map(|traj| traj[t].to_string()),
        );
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow<'a> {
    z_value: f64,
    scheme: &'a str,
    t_server: f64,
    param: &'a str,
}

/// `z_value,scheme,t_server,param`.
pub fn write_sweep<W: Write>(w: W, points: &[SweepPoint]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(SweepRow {
            z_value: p.z,
            scheme: p.column.name(),
            t_server: p.t_server,
            param: &p.param,
        })?;
    }
    out.flush()?;
    Ok(())
}
