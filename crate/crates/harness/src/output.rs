//! CSV tables written by the CLI and read back by the tests.
//!
//! Floats use Rust's shortest round-trip formatting, so every file parses
//! back to the exact values that produced it.

use std::fs;
use std::path::{Path, PathBuf};

use mabeam::{Complex64, PolarTarget, ScenarioKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::heatmap::Heatmap;
use crate::montecarlo::{MonteCarloTable, SchemeSummary, TrialRecord};
use crate::run::{RobustRow, RobustStudy, RunRecord, Scheme};

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::csv(path, e))
}

fn malformed(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Table {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn kind_name(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Nulling => "nulling",
        ScenarioKind::Multibeam => "multibeam",
    }
}

fn parse_kind(path: &Path, s: &str) -> Result<ScenarioKind> {
    match s {
        "nulling" => Ok(ScenarioKind::Nulling),
        "multibeam" => Ok(ScenarioKind::Multibeam),
        _ => Err(malformed(path, format!("unknown scenario kind `{s}`"))),
    }
}

fn target(path: &Path, distance: f64, angle: f64) -> Result<PolarTarget> {
    PolarTarget::new(distance, angle).map_err(|e| malformed(path, e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct RunSummaryRow {
    scheme: String,
    kind: String,
    objective: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AntennaRow {
    antenna: usize,
    position: f64,
    weight_re: f64,
    weight_im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GainRow {
    index: usize,
    distance: f64,
    angle: f64,
    gain: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    step: usize,
    objective: f64,
}

/// Files written for one run under `prefix`.
pub fn run_paths(dir: &Path, prefix: &str) -> [PathBuf; 4] {
    ["summary", "antennas", "gains", "trace"].map(|s| dir.join(format!("{prefix}_{s}.csv")))
}

pub fn write_run(dir: &Path, prefix: &str, rec: &RunRecord) -> Result<Vec<PathBuf>> {
    let [summary, antennas, gains, trace] = run_paths(dir, prefix);
    write_rows(
        &summary,
        &[RunSummaryRow {
            scheme: rec.scheme.name().into(),
            kind: kind_name(rec.kind).into(),
            objective: rec.objective,
        }],
    )?;
    let rows: Vec<AntennaRow> = rec
        .apv
        .iter()
        .zip(&rec.weights)
        .enumerate()
        .map(|(antenna, (&position, w))| AntennaRow {
            antenna,
            position,
            weight_re: w.re,
            weight_im: w.im,
        })
        .collect();
    write_rows(&antennas, &rows)?;
    let rows: Vec<GainRow> = rec
        .targets
        .iter()
        .zip(&rec.gains)
        .enumerate()
        .map(|(index, (t, &gain))| GainRow {
            index,
            distance: t.distance(),
            angle: t.angle(),
            gain,
        })
        .collect();
    write_rows(&gains, &rows)?;
    let rows: Vec<TraceRow> = rec
        .trace
        .iter()
        .enumerate()
        .map(|(step, &objective)| TraceRow { step, objective })
        .collect();
    write_rows(&trace, &rows)?;
    Ok(vec![summary, antennas, gains, trace])
}

pub fn read_run(dir: &Path, prefix: &str) -> Result<RunRecord> {
    let [summary, antennas, gains, trace] = run_paths(dir, prefix);
    let head: Vec<RunSummaryRow> = read_rows(&summary)?;
    let [head] = <[RunSummaryRow; 1]>::try_from(head)
        .map_err(|_| malformed(&summary, "expected exactly one row"))?;
    let ants: Vec<AntennaRow> = read_rows(&antennas)?;
    let gain_rows: Vec<GainRow> = read_rows(&gains)?;
    let trace_rows: Vec<TraceRow> = read_rows(&trace)?;
    Ok(RunRecord {
        scheme: head.scheme.parse()?,
        kind: parse_kind(&summary, &head.kind)?,
        apv: ants.iter().map(|a| a.position).collect(),
        weights: ants
            .iter()
            .map(|a| Complex64::new(a.weight_re, a.weight_im))
            .collect(),
        targets: gain_rows
            .iter()
            .map(|g| target(&gains, g.distance, g.angle))
            .collect::<Result<_>>()?,
        gains: gain_rows.iter().map(|g| g.gain).collect(),
        objective: head.objective,
        trace: trace_rows.iter().map(|t| t.objective).collect(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct RobustCsvRow {
    kind: String,
    epsilon_over_lambda: f64,
    epsilon: f64,
    approx_sum_gain: f64,
    exact_sum_gain: f64,
    gap_db: f64,
    sdr_upper_bound: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ErrorRow {
    row: usize,
    antenna: usize,
    position: f64,
    delta_d: f64,
}

pub fn robust_paths(dir: &Path) -> [PathBuf; 2] {
    [dir.join("robust.csv"), dir.join("robust_errors.csv")]
}

pub fn write_robust(dir: &Path, study: &RobustStudy) -> Result<Vec<PathBuf>> {
    let [main, errors] = robust_paths(dir);
    let rows: Vec<RobustCsvRow> = study
        .rows
        .iter()
        .map(|r| RobustCsvRow {
            kind: kind_name(study.kind).into(),
            epsilon_over_lambda: r.epsilon_over_lambda,
            epsilon: r.epsilon,
            approx_sum_gain: r.approx_sum_gain,
            exact_sum_gain: r.exact_sum_gain,
            gap_db: r.gap_db(),
            sdr_upper_bound: r.sdr_upper_bound,
        })
        .collect();
    write_rows(&main, &rows)?;
    let rows: Vec<ErrorRow> = study
        .rows
        .iter()
        .enumerate()
        .flat_map(|(row, r)| {
            r.delta_d.iter().zip(&study.apv).enumerate().map(
                move |(antenna, (&delta_d, &position))| ErrorRow {
                    row,
                    antenna,
                    position,
                    delta_d,
                },
            )
        })
        .collect();
    write_rows(&errors, &rows)?;
    Ok(vec![main, errors])
}

pub fn read_robust(dir: &Path) -> Result<RobustStudy> {
    let [main, errors] = robust_paths(dir);
    let head: Vec<RobustCsvRow> = read_rows(&main)?;
    let errs: Vec<ErrorRow> = read_rows(&errors)?;
    let kind = match head.first() {
        Some(r) => parse_kind(&main, &r.kind)?,
        None => return Err(malformed(&main, "no rows")),
    };
    let n = errs.iter().filter(|e| e.row == 0).count();
    let apv = errs.iter().take(n).map(|e| e.position).collect();
    let rows = head
        .into_iter()
        .enumerate()
        .map(|(i, r)| RobustRow {
            epsilon_over_lambda: r.epsilon_over_lambda,
            epsilon: r.epsilon,
            approx_sum_gain: r.approx_sum_gain,
            exact_sum_gain: r.exact_sum_gain,
            sdr_upper_bound: r.sdr_upper_bound,
            delta_d: errs
                .iter()
                .filter(|e| e.row == i)
                .map(|e| e.delta_d)
                .collect(),
        })
        .collect();
    Ok(RobustStudy { kind, apv, rows })
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRow {
    scheme: String,
    mean: f64,
    std_err: f64,
    trials: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectiveRow {
    trial: usize,
    redraws: usize,
    scheme: String,
    objective: f64,
}

/// Index 0 is the target.
#[derive(Debug, Serialize, Deserialize)]
struct DropRow {
    trial: usize,
    index: usize,
    distance: f64,
    angle: f64,
}

pub fn montecarlo_paths(dir: &Path) -> [PathBuf; 3] {
    [
        "montecarlo_summary",
        "montecarlo_trials",
        "montecarlo_drops",
    ]
    .map(|s| dir.join(format!("{s}.csv")))
}

pub fn write_montecarlo(dir: &Path, table: &MonteCarloTable) -> Result<Vec<PathBuf>> {
    let [summary, trials, drops] = montecarlo_paths(dir);
    let rows: Vec<SummaryRow> = table
        .summary
        .iter()
        .map(|s| SummaryRow {
            scheme: s.scheme.name().into(),
            mean: s.mean,
            std_err: s.std_err,
            trials: s.trials,
        })
        .collect();
    write_rows(&summary, &rows)?;
    let rows: Vec<ObjectiveRow> = table
        .trials
        .iter()
        .flat_map(|t| {
            table
                .schemes
                .iter()
                .zip(&t.objectives)
                .map(|(s, &objective)| ObjectiveRow {
                    trial: t.trial,
                    redraws: t.redraws,
                    scheme: s.name().into(),
                    objective,
                })
        })
        .collect();
    write_rows(&trials, &rows)?;
    let rows: Vec<DropRow> = table
        .trials
        .iter()
        .flat_map(|t| {
            std::iter::once(&t.target0)
                .chain(&t.users)
                .enumerate()
                .map(|(index, p)| DropRow {
                    trial: t.trial,
                    index,
                    distance: p.distance(),
                    angle: p.angle(),
                })
        })
        .collect();
    write_rows(&drops, &rows)?;
    Ok(vec![summary, trials, drops])
}

pub fn read_montecarlo(dir: &Path) -> Result<MonteCarloTable> {
    let [summary_path, trials_path, drops_path] = montecarlo_paths(dir);
    let summary = read_rows::<SummaryRow>(&summary_path)?
        .into_iter()
        .map(|r| {
            Ok(SchemeSummary {
                scheme: r.scheme.parse()?,
                mean: r.mean,
                std_err: r.std_err,
                trials: r.trials,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let schemes: Vec<Scheme> = summary.iter().map(|s| s.scheme).collect();
    let objectives: Vec<ObjectiveRow> = read_rows(&trials_path)?;
    let drops: Vec<DropRow> = read_rows(&drops_path)?;
    if schemes.is_empty() || objectives.len() % schemes.len() != 0 {
        return Err(malformed(
            &trials_path,
            "objective count does not match schemes",
        ));
    }
    let trials = objectives
        .chunks(schemes.len())
        .map(|chunk| {
            let trial = chunk[0].trial;
            let mut points = drops
                .iter()
                .filter(|d| d.trial == trial)
                .map(|d| target(&drops_path, d.distance, d.angle));
            let target0 = points
                .next()
                .ok_or_else(|| malformed(&drops_path, format!("trial {trial} has no target")))??;
            Ok(TrialRecord {
                trial,
                redraws: chunk[0].redraws,
                target0,
                users: points.collect::<Result<_>>()?,
                objectives: chunk.iter().map(|o| o.objective).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloTable {
        schemes,
        trials,
        summary,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct AxisRow {
    axis: String,
    index: usize,
    value: f64,
}

pub fn heatmap_paths(dir: &Path, prefix: &str) -> [PathBuf; 2] {
    [
        dir.join(format!("{prefix}.csv")),
        dir.join(format!("{prefix}_axes.csv")),
    ]
}

/// Matrix file (header `c0, c1, …`) plus an axes sidecar.
pub fn write_heatmap(dir: &Path, prefix: &str, map: &Heatmap) -> Result<Vec<PathBuf>> {
    let [matrix, axes] = heatmap_paths(dir, prefix);
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut w = csv::Writer::from_path(&matrix).map_err(|e| HarnessError::csv(&matrix, e))?;
    let header: Vec<String> = (0..map.cols.len()).map(|j| format!("c{j}")).collect();
    w.write_record(&header)
        .map_err(|e| HarnessError::csv(&matrix, e))?;
    for row in &map.gains {
        w.serialize(row)
            .map_err(|e| HarnessError::csv(&matrix, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(&matrix, e))?;

    let (col_name, row_name) = if map.polar {
        ("theta", "r")
    } else {
        ("x", "y")
    };
    let rows: Vec<AxisRow> = map
        .cols
        .iter()
        .enumerate()
        .map(|(index, &value)| AxisRow {
            axis: col_name.into(),
            index,
            value,
        })
        .chain(map.rows.iter().enumerate().map(|(index, &value)| AxisRow {
            axis: row_name.into(),
            index,
            value,
        }))
        .collect();
    write_rows(&axes, &rows)?;
    Ok(vec![matrix, axes])
}

pub fn read_heatmap(dir: &Path, prefix: &str) -> Result<Heatmap> {
    let [matrix, axes] = heatmap_paths(dir, prefix);
    let axis_rows: Vec<AxisRow> = read_rows(&axes)?;
    let polar = axis_rows.iter().any(|a| a.axis == "theta");
    let pick = |name: &str| -> Vec<f64> {
        axis_rows
            .iter()
            .filter(|a| a.axis == name)
            .map(|a| a.value)
            .collect()
    };
    let (cols, rows) = if polar {
        (pick("theta"), pick("r"))
    } else {
        (pick("x"), pick("y"))
    };
    let gains: Vec<Vec<f64>> = read_rows(&matrix)?;
    if gains.len() != rows.len() || gains.iter().any(|r| r.len() != cols.len()) {
        return Err(malformed(&matrix, "matrix shape does not match the axes"));
    }
    Ok(Heatmap {
        polar,
        cols,
        rows,
        gains,
    })
}
