use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use epf_core::eval::{dm_matrix, DmMatrix, ExperimentOutcome};
use epf_core::explain::Importance;
use epf_core::models::ModelId;
use serde::{Deserialize, Serialize};

use super::explain::IMPORTANCE_FILE;
use super::train::{EvaluationReport, EVALUATION_FILE};
use super::REPORTS_DIR;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, ExitKind};
use crate::io::{read_json, write_atomic, write_json};

pub const DM_JSON: &str = "dm.json";
pub const DM_CSV: &str = "dm.csv";

fn load_outcomes(dir: &Path) -> CliResult<Vec<ExperimentOutcome>> {
    let nested = dir.join(REPORTS_DIR);
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let entries = std::fs::read_dir(&dir).map_err(|e| CliError::data(format!("reading {}: {e}", dir.display())))?;
    let mut found: Vec<(ModelId, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::data(e.to_string()))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        if let Some(id) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<ModelId>().ok())
        {
            found.push((id, path));
        }
    }
    found.sort();
    found.iter().map(|(_, p)| read_json(p)).collect()
}

/// Pairwise DM matrix over the models' seed-averaged forecast errors.
pub fn dm(reports: &Path, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let outcomes = load_outcomes(reports)?;
    let series: Vec<(String, Vec<f64>)> = outcomes
        .iter()
        .filter_map(|o| o.mean_errors().map(|e| (o.model.clone(), e)))
        .collect();
    if series.len() < 2 {
        return Err(CliError::config(format!(
            "{} model report(s) with successful runs in {}; need at least 2",
            series.len(),
            reports.display()
        )));
    }
    let matrix = dm_matrix(&series)?;
    if matrix.cells.iter().flatten().all(Option::is_none) {
        return Err(CliError::new(
            ExitKind::Degenerate,
            "every model pair has a degenerate loss differential",
        ));
    }
    let out_dir = out.unwrap_or(reports);
    let json = out_dir.join(DM_JSON);
    let csv = out_dir.join(DM_CSV);
    write_json(&json, &matrix)?;
    write_atomic(&csv, matrix.to_csv().as_bytes())?;
    Ok(vec![json, csv])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub runs: usize,
    pub failures: usize,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub smape: f64,
    pub smape_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub rows: Vec<SummaryRow>,
    /// Lowest mean SMAPE.
    pub best_model: Option<String>,
    pub dm: Option<DmMatrix>,
    pub importance: Option<Vec<Importance>>,
}

pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";

fn optional<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Option<T>> {
    if path.exists() {
        read_json(path).map(Some)
    } else {
        Ok(None)
    }
}

/// Consolidates `evaluation.json` with the DM matrix and importance ranking
/// when present.
pub fn report(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let eval: EvaluationReport = read_json(&dir.join(EVALUATION_FILE))?;
    let rows: Vec<SummaryRow> = eval
        .models
        .iter()
        .map(|m| {
            let nan = f64::NAN;
            let mean = |metric: &str| m.stats.as_ref().and_then(|s| s.get(metric)).map_or(nan, |s| s.mean);
            SummaryRow {
                model: m.model.clone(),
                runs: m.stats.as_ref().map_or(0, |s| s.smape.count),
                failures: m.failures.len(),
                mae: mean("mae"),
                rmse: mean("rmse"),
                mape: mean("mape"),
                smape: mean("smape"),
                smape_std: m.stats.as_ref().map_or(nan, |s| s.smape.std),
            }
        })
        .collect();
    let best_model = rows
        .iter()
        .filter(|r| r.smape.is_finite())
        .min_by(|a, b| a.smape.total_cmp(&b.smape))
        .map(|r| r.model.clone());
    let summary = Summary {
        config: eval.config,
        best_model,
        dm: optional(&dir.join(DM_JSON))?,
        importance: optional(&dir.join(IMPORTANCE_FILE))?,
        rows,
    };
    let mut csv = String::from("model,runs,failures,mae,rmse,mape,smape,smape_std\n");
    for r in &summary.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.model, r.runs, r.failures, r.mae, r.rmse, r.mape, r.smape, r.smape_std
        )
        .unwrap();
    }
    let json_path = dir.join(SUMMARY_JSON);
    let csv_path = dir.join(SUMMARY_CSV);
    write_json(&json_path, &summary)?;
    write_atomic(&csv_path, csv.as_bytes())?;
    Ok(vec![json_path, csv_path])
}
