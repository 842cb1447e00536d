//! Repeated walk-forward runs of one model under consecutive seeds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{metrics_with, MetricOptions, MetricReport};
use super::stats::ExperimentStats;
use crate::dataio::TimeSeriesTable;
use crate::error::{Error, Result};
use crate::models::{walk_forward, FoldForecast, MaskCache, ModelSpec, PipelineConfig};
use crate::numkernel::RngState;
use crate::par;
use crate::splits::SplitPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub report: MetricReport,
    pub forecasts: Vec<FoldForecast>,
}

impl RunResult {
    pub fn actual(&self) -> Vec<f64> {
        self.forecasts.iter().flat_map(|f| f.actual.iter().copied()).collect()
    }

    pub fn predicted(&self) -> Vec<f64> {
        self.forecasts
            .iter()
            .flat_map(|f| f.predicted.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mae: ExperimentStats,
    pub rmse: ExperimentStats,
    pub mape: ExperimentStats,
    pub smape: ExperimentStats,
}

impl MetricStats {
    pub fn from_reports(reports: &[MetricReport]) -> Result<Self> {
        let of = |f: fn(&MetricReport) -> f64| ExperimentStats::from_values(&reports.iter().map(f).collect::<Vec<_>>());
        Ok(MetricStats {
            mae: of(|r| r.mae)?,
            rmse: of(|r| r.rmse)?,
            mape: of(|r| r.mape)?,
            smape: of(|r| r.smape)?,
        })
    }

    pub fn get(&self, metric: &str) -> Option<&ExperimentStats> {
        match metric {
            "mae" => Some(&self.mae),
            "rmse" => Some(&self.rmse),
            "mape" => Some(&self.mape),
            "smape" => Some(&self.smape),
            _ => None,
        }
    }
}

/// Runs in seed order, failures listed separately; `stats` is absent only
/// when every run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub model: String,
    pub runs: Vec<RunResult>,
    pub failures: Vec<RunFailure>,
    pub stats: Option<MetricStats>,
}

impl ExperimentOutcome {
    /// Per-day forecast averaged over the successful runs, minus the actual
    /// value. Used for pairwise accuracy tests between models.
    pub fn mean_errors(&self) -> Option<Vec<f64>> {
        let first = self.runs.first()?;
        let actual = first.actual();
        let mut sum = vec![0.0; actual.len()];
        for run in &self.runs {
            for (s, p) in sum.iter_mut().zip(run.predicted()) {
                *s += p;
            }
        }
        let k = self.runs.len() as f64;
        Some(sum.iter().zip(&actual).map(|(s, a)| s / k - a).collect())
    }
}

/// Trains and walk-forward evaluates `spec` with seeds
/// `base_seed..base_seed + n`. Seeds run in parallel; results are merged in
/// seed order.
#[allow(clippy::too_many_arguments)]
pub fn run_experiments(
    spec: &ModelSpec,
    table: &TimeSeriesTable,
    plan: &SplitPlan,
    config: &PipelineConfig,
    n: usize,
    base_seed: u64,
    options: MetricOptions,
    cache: Option<&MaskCache>,
) -> Result<ExperimentOutcome> {
    if n == 0 {
        return Err(Error::config("at least one experiment run is required"));
    }
    let seeds: Vec<u64> = (0..n as u64).map(|i| base_seed + i).collect();
    let results = par::map_slice(&seeds, |&seed| -> Result<RunResult> {
        let forecasts = walk_forward(spec, table, plan, config, &RngState::new(seed), cache, |_, _| Ok(()))?;
        let actual: Vec<f64> = forecasts.iter().flat_map(|f| f.actual.iter().copied()).collect();
        let predicted: Vec<f64> = forecasts.iter().flat_map(|f| f.predicted.iter().copied()).collect();
        let report = metrics_with(&actual, &predicted, options)?;
        Ok(RunResult {
            seed,
            report,
            forecasts,
        })
    });
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => failures.push(RunFailure {
                seed: *seed,
                error: e.to_string(),
            }),
        }
    }
    let stats = if runs.is_empty() {
        None
    } else {
        Some(MetricStats::from_reports(
            &runs.iter().map(|r| r.report).collect::<Vec<_>>(),
        )?)
    };
    Ok(ExperimentOutcome {
        model: spec.id.to_string(),
        runs,
        failures,
        stats,
    })
}

/// One row per model and metric.
pub fn stats_csv(outcomes: &[ExperimentOutcome]) -> String {
    let mut out = String::from("model,metric,count,mean,std,min,p25,p50,p75,max\n");
    for o in outcomes {
        let Some(stats) = &o.stats else { continue };
        for metric in MetricReport::NAMES {
            let s = stats.get(metric).expect("known metric");
            writeln!(
                out,
                "{},{metric},{},{},{},{},{},{},{},{}",
                o.model, s.count, s.mean, s.std, s.min, s.p25, s.p50, s.p75, s.max
            )
            .unwrap();
        }
    }
    out
}

/// One row per model and successful run.
pub fn runs_csv(outcomes: &[ExperimentOutcome]) -> String {
    let mut out = String::from("model,seed,n,mae,rmse,mape,smape\n");
    for o in outcomes {
        for r in &o.runs {
            let m = &r.report;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                o.model, r.seed, m.n, m.mae, m.rmse, m.mape, m.smape
            )
            .unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_generate, SynthConfig};
    use crate::models::NarmaxGrid;

    fn setup() -> (TimeSeriesTable, PipelineConfig, SplitPlan) {
        let table = synth_generate(&mut RngState::new(8), 120, &SynthConfig::default())
            .unwrap()
            .table;
        let cfg = PipelineConfig {
            narmax: NarmaxGrid {
                lags: vec![1],
                degrees: vec![1],
            },
            val_len: Some(12),
            test_len: 10,
            ..PipelineConfig::default()
        };
        let plan = cfg.plan(table.len()).unwrap();
        (table, cfg, plan)
    }

    #[test]
    fn single_run_has_zero_spread() {
        let (table, cfg, plan) = setup();
        let spec = cfg.spec("M0".parse().unwrap()).unwrap();
        let o = run_experiments(&spec, &table, &plan, &cfg, 1, 3, MetricOptions::default(), None).unwrap();
        let s = o.stats.unwrap();
        assert_eq!(s.smape.mean, o.runs[0].report.smape);
        assert_eq!(s.smape.std, 0.0);
        assert!(s.smape.mean.is_finite() && s.smape.mean > 0.0);
        assert_eq!(o.runs[0].report.n, plan.test_region().len());
    }

    #[test]
    fn repeatable_and_seed_ordered() {
        let (table, cfg, plan) = setup();
        let spec = cfg.spec("M0".parse().unwrap()).unwrap();
        let a = run_experiments(&spec, &table, &plan, &cfg, 3, 10, MetricOptions::default(), None).unwrap();
        let b = run_experiments(&spec, &table, &plan, &cfg, 3, 10, MetricOptions::default(), None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![10, 11, 12]);
        assert_eq!(stats_csv(std::slice::from_ref(&a)).lines().count(), 5);
        assert_eq!(runs_csv(std::slice::from_ref(&a)).lines().count(), 4);
        assert_eq!(a.mean_errors().unwrap().len(), plan.test_region().len());
    }

    #[test]
    fn failures_are_collected() {
        let (table, cfg, plan) = setup();
        let mut spec = cfg.spec("M1".parse().unwrap()).unwrap();
        spec.train.learning_rate = f64::NAN;
        let o = run_experiments(&spec, &table, &plan, &cfg, 2, 0, MetricOptions::default(), None).unwrap();
        assert!(o.runs.is_empty());
        assert_eq!(o.failures.len(), 2);
        assert!(o.stats.is_none());
        assert_eq!(o.failures[0].seed, 0);
    }

    #[test]
    fn zero_runs_rejected() {
        let (table, cfg, plan) = setup();
        let spec = cfg.spec("M0".parse().unwrap()).unwrap();
        assert!(run_experiments(&spec, &table, &plan, &cfg, 0, 0, MetricOptions::default(), None).is_err());
    }
}
