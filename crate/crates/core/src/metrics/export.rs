//! Metrics files.
//!
//! CSV layout (column order is stable):
//!
//! | file           | columns                                              |
//! |----------------|------------------------------------------------------|
//! | `jobs.csv`     | id, submit, start, finish, cores, wait, trace_wait   |
//! | `occupied.csv` | time, occupied_cores                                 |
//! | `running.csv`  | time, running_jobs                                   |
//! | `wait_cdf.csv` | wait, fraction                                       |
//! | `summary.json` | [`SummaryStats`] object                              |
//!
//! The JSON format writes the same content as one `metrics.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CdfPoint, JobRecord, MetricsError, MetricsLog, StepSeries, SummaryStats};
use crate::engine::SimulationResult;
use crate::sim::SimTime;

pub const EXPORT_FILES: [&str; 5] = ["jobs.csv", "occupied.csv", "running.csv", "wait_cdf.csv", "summary.json"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub summary: SummaryStats,
    pub jobs: Vec<JobRecord>,
    pub occupied: StepSeries,
    pub running: StepSeries,
    pub wait_cdf: Vec<CdfPoint>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> MetricsError {
    MetricsError::Io(format!("{}: {e}", path.display()))
}

fn cdf_or_empty(log: &MetricsLog, points: usize) -> Result<Vec<CdfPoint>, MetricsError> {
    match log.wait_cdf(points) {
        Err(MetricsError::EmptyInput) => Ok(Vec::new()),
        other => other,
    }
}

/// Writes the metrics set into `dir` (created if missing) and returns the
/// written paths.
pub fn export(log: &MetricsLog, format: ExportFormat, dir: &Path, cdf_points: usize) -> Result<Vec<PathBuf>, MetricsError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let cdf = cdf_or_empty(log, cdf_points)?;
    match format {
        ExportFormat::Json => {
            let doc = MetricsDocument {
                summary: log.summary(),
                jobs: log.records.clone(),
                occupied: log.occupied(),
                running: log.running(),
                wait_cdf: cdf,
            };
            let path = dir.join("metrics.json");
            write_json(&path, &doc)?;
            Ok(vec![path])
        }
        ExportFormat::Csv => {
            let paths: Vec<PathBuf> = EXPORT_FILES.iter().map(|f| dir.join(f)).collect();
            write_csv(&paths[0], &["id", "submit", "start", "finish", "cores", "wait", "trace_wait"], &log.records)?;
            write_series(&paths[1], "occupied_cores", &log.occupied())?;
            write_series(&paths[2], "running_jobs", &log.running())?;
            write_csv(&paths[3], &["wait", "fraction"], &cdf)?;
            write_json(&paths[4], &log.summary())?;
            Ok(paths)
        }
    }
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), MetricsError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_series(path: &Path, column: &str, series: &StepSeries) -> Result<(), MetricsError> {
    write_csv(path, &["time", column], &series.points)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), MetricsError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, MetricsError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| MetricsError::Decode { path: path.display().to_string(), reason: e.to_string() })
}

pub fn read_jobs_csv(path: &Path) -> Result<Vec<JobRecord>, MetricsError> {
    read_csv(path)
}

pub fn read_series_csv(path: &Path) -> Result<StepSeries, MetricsError> {
    Ok(StepSeries { points: read_csv::<(SimTime, u64)>(path)? })
}

pub fn read_summary(path: &Path) -> Result<SummaryStats, MetricsError> {
    read_json(path)
}

pub fn read_metrics_json(path: &Path) -> Result<MetricsDocument, MetricsError> {
    read_json(path)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, MetricsError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| MetricsError::Decode { path: path.display().to_string(), reason: e.to_string() })
}

/// Event log as `time,kind,id` rows in dispatch order.
pub fn write_event_log(result: &SimulationResult, path: &Path) -> Result<(), MetricsError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "time,kind,id")?;
        for e in &result.event_log {
            writeln!(w, "{},{},{}", e.time, e.kind.as_str(), result.entity_id(e.entity))?;
        }
        w.flush()
    };
    emit().map_err(|e| io_err(path, e))
}
