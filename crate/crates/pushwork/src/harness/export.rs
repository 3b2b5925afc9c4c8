//! Metric export and import: JSON documents and CSV tables for plotting.
//!
//! CSV exports are split per table: a run log writes its stats series at
//! the given path plus `<stem>.episodes.csv` and `<stem>.meta.json`
//! siblings; an eval report writes episode rows plus `<stem>.hist.csv`,
//! `<stem>.choices.csv` and `<stem>.meta.json`. Importers reverse both
//! losslessly.

use super::ablate::{AblationRow, AblationTable};
use super::eval::{ChoiceRecord, EvalEpisode, EvalReport, HistBin};
use super::train::RunLog;
use super::Variant;
use crate::envs::TaskKind;
use crate::ppo::{EpisodeRecord, TrainStats};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExportError + '_ {
    move |source| ExportError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> ExportError + '_ {
    move |source| ExportError::Json {
        path: path.display().to_string(),
        source,
    }
}

/// `runlog.csv` -> `runlog.episodes.csv` and friends.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ExportError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row.map_err(csv_err(path))?);
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExportError> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    std::fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ExportError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

// ---------------------------------------------------------------------
// RunLog
// ---------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RunLogMeta {
    task: TaskKind,
    variant: Variant,
    seed: u64,
}

pub fn export_runlog_json(log: &RunLog, path: &Path) -> Result<(), ExportError> {
    write_json(path, log)
}

pub fn import_runlog_json(path: &Path) -> Result<RunLog, ExportError> {
    read_json(path)
}

/// Stats series at `path`, episode records and metadata in siblings.
pub fn export_runlog_csv(log: &RunLog, path: &Path) -> Result<(), ExportError> {
    write_csv(path, &log.series)?;
    write_csv(&sibling(path, "episodes.csv"), &log.episodes)?;
    write_json(
        &sibling(path, "meta.json"),
        &RunLogMeta {
            task: log.task,
            variant: log.variant,
            seed: log.seed,
        },
    )
}

pub fn import_runlog_csv(path: &Path) -> Result<RunLog, ExportError> {
    let series: Vec<TrainStats> = read_csv(path)?;
    let episodes: Vec<EpisodeRecord> = read_csv(&sibling(path, "episodes.csv"))?;
    let meta: RunLogMeta = read_json(&sibling(path, "meta.json"))?;
    Ok(RunLog {
        task: meta.task,
        variant: meta.variant,
        seed: meta.seed,
        series,
        episodes,
    })
}

// ---------------------------------------------------------------------
// EvalReport
// ---------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct EvalMeta {
    task: TaskKind,
}

pub fn export_eval_json(report: &EvalReport, path: &Path) -> Result<(), ExportError> {
    write_json(path, report)
}

pub fn import_eval_json(path: &Path) -> Result<EvalReport, ExportError> {
    read_json(path)
}

/// Episode rows at `path`; histogram, box choices, and metadata in
/// siblings. Aggregates are recomputed on import, so the round trip is
/// exact.
pub fn export_eval_csv(report: &EvalReport, path: &Path) -> Result<(), ExportError> {
    write_csv(path, &report.episodes)?;
    write_csv(&sibling(path, "hist.csv"), &report.alpha_histogram)?;
    write_csv(&sibling(path, "choices.csv"), &report.mass_choices)?;
    write_json(&sibling(path, "meta.json"), &EvalMeta { task: report.task })
}

pub fn import_eval_csv(path: &Path) -> Result<EvalReport, ExportError> {
    let episodes: Vec<EvalEpisode> = read_csv(path)?;
    let _hist: Vec<HistBin> = read_csv(&sibling(path, "hist.csv"))?;
    let choices: Vec<ChoiceRecord> = read_csv(&sibling(path, "choices.csv"))?;
    let meta: EvalMeta = read_json(&sibling(path, "meta.json"))?;
    Ok(EvalReport::assemble(meta.task, episodes, choices))
}

// ---------------------------------------------------------------------
// AblationTable
// ---------------------------------------------------------------------

pub fn export_ablation_json(table: &AblationTable, path: &Path) -> Result<(), ExportError> {
    write_json(path, table)
}

/// Long-format comparison rows; the full table (including evals) lives in
/// the JSON export.
pub fn export_ablation_csv(table: &AblationTable, path: &Path) -> Result<(), ExportError> {
    let rows: Vec<AblationRow> = table.rows.clone();
    write_csv(path, &rows)?;
    write_json(&sibling(path, "meta.json"), &(table.task, &table.seeds))
}
