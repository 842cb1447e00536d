//! JSON experiment configuration. Every field has a default; a report embeds
//! the fully resolved form.

use std::path::{Path, PathBuf};

use epf_core::dataio::{load_csv, synth_generate, Granularity, SynthConfig, TimeSeriesTable};
use epf_core::eval::MetricOptions;
use epf_core::models::{parse_model_list, ModelId, PipelineConfig};
use epf_core::numkernel::RngState;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::read_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    /// Daily CSV in the catalog layout.
    Csv { path: PathBuf },
    /// Generated fixture with planted relevant features.
    Synth { seed: u64, days: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub models: Vec<ModelId>,
    /// Experiments run with seeds `base_seed..base_seed + experiments`.
    pub base_seed: u64,
    pub experiments: usize,
    pub pipeline: PipelineConfig,
    pub metrics: MetricOptions,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::Synth { seed: 0, days: 400 },
            models: ModelId::all().collect(),
            base_seed: 0,
            experiments: 10,
            pipeline: PipelineConfig::default(),
            metrics: MetricOptions::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_text(path).map_err(|e| CliError::config(e.message))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.experiments == 0 {
            return Err(CliError::config("experiments must be at least 1"));
        }
        if self.models.is_empty() {
            return Err(CliError::config("no models listed"));
        }
        self.pipeline.validate()?;
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.experiments as u64).map(|i| self.base_seed + i).collect()
    }

    /// Applies a `--models` list such as `M0..M13` or `M1,M4`.
    pub fn with_models(mut self, list: Option<&str>) -> CliResult<Self> {
        if let Some(list) = list {
            self.models = parse_model_list(list)?;
        }
        Ok(self)
    }

    pub fn load_table(&self) -> CliResult<TimeSeriesTable> {
        load_data(&self.data)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn load_data(source: &DataSource) -> CliResult<TimeSeriesTable> {
    match source {
        DataSource::Csv { path } => Ok(load_csv(path, Granularity::Daily)?),
        DataSource::Synth { seed, days } => {
            Ok(synth_generate(&mut RngState::new(*seed), *days, &SynthConfig::default())?.table)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(r#"{"experiments": 2, "models": ["M0", "M4"]}"#).unwrap();
        assert_eq!(c.seeds(), vec![0, 1]);
        assert_eq!(c.models.len(), 2);
        assert_eq!(c.pipeline.test_len, 7);
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_configs() {
        assert_eq!(
            ExperimentConfig::from_json(r#"{"models": ["M99"]}"#)
                .unwrap_err()
                .code(),
            2
        );
        assert_eq!(
            ExperimentConfig::from_json(r#"{"experiments": 0}"#).unwrap_err().code(),
            2
        );
        assert_eq!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).unwrap_err().code(), 2);
        assert_eq!(ExperimentConfig::from_json(r#"{"models": []}"#).unwrap_err().code(), 2);
    }

    #[test]
    fn data_sources() {
        let c = ExperimentConfig::from_json(r#"{"data": {"csv": {"path": "x.csv"}}}"#).unwrap();
        assert_eq!(c.data, DataSource::Csv { path: "x.csv".into() });
        let c = ExperimentConfig::from_json(r#"{"data": {"synth": {"seed": 4, "days": 90}}}"#).unwrap();
        assert_eq!(c.load_table().unwrap().len(), 90);
    }

    #[test]
    fn model_override() {
        let c = ExperimentConfig::default().with_models(Some("M2..M4")).unwrap();
        assert_eq!(
            c.models.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            vec!["M2", "M3", "M4"]
        );
        assert!(ExperimentConfig::default().with_models(Some("M2..X")).is_err());
    }
}
