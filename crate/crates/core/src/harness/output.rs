use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Estimator, ExperimentConfig};
use super::sweep::{Aggregate, SweepKind, SweepResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "estimator,snr_db,frames,trial,seed,nmse_db,iterations,runtime_ms";

#[derive(Serialize)]
struct CsvRow {
    estimator: Estimator,
    snr_db: f64,
    frames: usize,
    trial: usize,
    seed: u64,
    nmse_db: f64,
    iterations: usize,
    runtime_ms: f64,
}

#[derive(Serialize)]
struct FailureEntry<'a> {
    estimator: Estimator,
    snr_db: f64,
    frames: usize,
    trial: usize,
    message: &'a str,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    kind: SweepKind,
    config: &'a ExperimentConfig,
    aggregates: &'a [Aggregate],
    failures: Vec<FailureEntry<'a>>,
    nonconverged_solves: usize,
    min_feasibility_margin: Option<f64>,
}

/// Sidecar path next to a CSV: `x.csv` → `x.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn csv_string(result: &SweepResult) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in &result.rows {
        w.serialize(CsvRow {
            estimator: r.estimator,
            snr_db: r.snr_db,
            frames: r.frames,
            trial: r.trial,
            seed: r.seed,
            nmse_db: r.nmse_db,
            iterations: r.iterations,
            runtime_ms: r.runtime_ms,
        })
        .map_err(|e| Error::InvalidInput(format!("csv row: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv buffer: {e}")))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))?;
    if text.is_empty() {
        Ok(format!("{CSV_HEADER}\n"))
    } else {
        Ok(text)
    }
}

pub fn json_string(result: &SweepResult) -> Result<String> {
    let failures = result
        .rows
        .iter()
        .filter_map(|r| {
            r.failure.as_deref().map(|message| FailureEntry {
                estimator: r.estimator,
                snr_db: r.snr_db,
                frames: r.frames,
                trial: r.trial,
                message,
            })
        })
        .collect();
    let sidecar = Sidecar {
        kind: result.kind,
        config: &result.config,
        aggregates: &result.aggregates,
        failures,
        nonconverged_solves: result.rows.iter().map(|r| r.nonconverged).sum(),
        min_feasibility_margin: result
            .rows
            .iter()
            .filter_map(|r| r.feasibility_margin)
            .reduce(f64::min),
    };
    let mut s = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::InvalidInput(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes the CSV to `path` and the JSON sidecar beside it; returns both paths.
pub fn emit_results(result: &SweepResult, path: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let json_path = sidecar_path(path);
    for (p, body) in [(path.to_path_buf(), csv_string(result)?), (json_path.clone(), json_string(result)?)] {
        let mut f = fs::File::create(&p).map_err(io_err(&p))?;
        f.write_all(body.as_bytes()).map_err(io_err(&p))?;
    }
    Ok((path.to_path_buf(), json_path))
}
