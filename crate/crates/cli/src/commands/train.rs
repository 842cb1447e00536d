use std::path::{Path, PathBuf};

use epf_core::eval::{
    metrics_with, run_experiments, runs_csv, stats_csv, ExperimentOutcome, MetricReport, MetricStats, RunFailure,
};
use epf_core::models::{bundle_file_name, walk_forward, MaskCache, ModelId};
use epf_core::numkernel::RngState;
use epf_core::par;
use serde::{Deserialize, Serialize};

use super::{MODELS_DIR, REPORTS_DIR};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, ExitKind};
use crate::io::{resolve_out_dir, write_atomic, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedTraining {
    pub seed: u64,
    pub bundles: Vec<String>,
    pub test_metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ModelId,
    pub config: ExperimentConfig,
    pub runs: Vec<SeedTraining>,
}

/// Walk-forward training of `model` for every configured seed.
pub fn train(model: &str, config: &Path, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let cfg = ExperimentConfig::load(config)?;
    let id: ModelId = model.parse()?;
    let spec = cfg.pipeline.spec(id)?;
    let table = cfg.load_table()?;
    let plan = cfg.pipeline.plan(table.len())?;
    let out_dir = resolve_out_dir(out, cfg.output_dir.as_deref());
    let models_dir = out_dir.join(MODELS_DIR);
    let cache = MaskCache::new();

    let seeds = cfg.seeds();
    let runs = par::map_slice(&seeds, |&seed| -> CliResult<SeedTraining> {
        let mut bundles = Vec::new();
        let forecasts = walk_forward(
            &spec,
            &table,
            &plan,
            &cfg.pipeline,
            &RngState::new(seed),
            Some(&cache),
            |j, m| {
                let name = bundle_file_name(id, seed, j);
                let mut text = m.to_json();
                text.push('\n');
                write_atomic(&models_dir.join(&name), text.as_bytes())
                    .map_err(|e| epf_core::Error::Io(std::io::Error::other(e.message)))?;
                bundles.push(name);
                Ok(())
            },
        )?;
        let actual: Vec<f64> = forecasts.iter().flat_map(|f| f.actual.iter().copied()).collect();
        let predicted: Vec<f64> = forecasts.iter().flat_map(|f| f.predicted.iter().copied()).collect();
        Ok(SeedTraining {
            seed,
            bundles,
            test_metrics: metrics_with(&actual, &predicted, cfg.metrics)?,
        })
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;

    let mut written: Vec<PathBuf> = runs
        .iter()
        .flat_map(|r| r.bundles.iter().map(|b| models_dir.join(b)))
        .collect();
    let report_path = out_dir.join(format!("train_{id}.json"));
    write_json(
        &report_path,
        &TrainReport {
            model: id,
            config: cfg,
            runs,
        },
    )?;
    written.push(report_path);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub stats: Option<MetricStats>,
    pub failures: Vec<RunFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// The resolved configuration this evaluation ran with.
    pub config: ExperimentConfig,
    pub rows: usize,
    pub folds: usize,
    pub test_rows: usize,
    pub models: Vec<ModelSummary>,
}

pub const EVALUATION_FILE: &str = "evaluation.json";
pub const STATS_FILE: &str = "stats.csv";
pub const RUNS_FILE: &str = "runs.csv";

/// Repeated-experiment protocol for every configured model. Reports are
/// written even when some runs fail; the command then exits with the
/// training-failure code.
pub fn evaluate(models: Option<&str>, config: &Path, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let cfg = ExperimentConfig::load(config)?.with_models(models)?;
    let table = cfg.load_table()?;
    let plan = cfg.pipeline.plan(table.len())?;
    let out_dir = resolve_out_dir(out, cfg.output_dir.as_deref());
    let cache = MaskCache::new();

    let outcomes: Vec<ExperimentOutcome> = par::map_slice(&cfg.models, |&id| -> CliResult<ExperimentOutcome> {
        let spec = cfg.pipeline.spec(id)?;
        Ok(run_experiments(
            &spec,
            &table,
            &plan,
            &cfg.pipeline,
            cfg.experiments,
            cfg.base_seed,
            cfg.metrics,
            Some(&cache),
        )?)
    })
    .into_iter()
    .collect::<CliResult<_>>()?;

    let mut written = Vec::new();
    for o in &outcomes {
        let p = out_dir.join(REPORTS_DIR).join(format!("{}.json", o.model));
        write_json(&p, o)?;
        written.push(p);
    }
    let stats = out_dir.join(STATS_FILE);
    write_atomic(&stats, stats_csv(&outcomes).as_bytes())?;
    let runs = out_dir.join(RUNS_FILE);
    write_atomic(&runs, runs_csv(&outcomes).as_bytes())?;
    let summary = EvaluationReport {
        rows: table.len(),
        folds: plan.folds.len(),
        test_rows: plan.test_region().len(),
        models: outcomes
            .iter()
            .map(|o| ModelSummary {
                model: o.model.clone(),
                stats: o.stats.clone(),
                failures: o.failures.clone(),
            })
            .collect(),
        config: cfg,
    };
    let eval_path = out_dir.join(EVALUATION_FILE);
    write_json(&eval_path, &summary)?;
    written.extend([stats, runs, eval_path]);

    let failed: Vec<String> = summary
        .models
        .iter()
        .flat_map(|m| {
            m.failures
                .iter()
                .map(move |f| format!("{} seed {}: {}", m.model, f.seed, f.error))
        })
        .collect();
    if !failed.is_empty() {
        return Err(CliError::new(
            ExitKind::Training,
            format!("{} run(s) failed: {}", failed.len(), failed.join("; ")),
        ));
    }
    Ok(written)
}
