use std::path::{Path, PathBuf};

use epf_core::dataio::{
    aggregate_daily, clean, load_csv, synth_generate, to_csv_string, FeatureCatalog, Granularity, SynthConfig,
    TargetAggregation,
};
use epf_core::numkernel::RngState;

use crate::error::{CliError, CliResult};
use crate::io::{write_atomic, write_json};

pub fn ingest(hourly: &Path, out: &Path, target_hour: Option<u8>) -> CliResult<Vec<PathBuf>> {
    let target = match target_hour {
        Some(h) if h < 24 => TargetAggregation::Hour(h),
        Some(h) => return Err(CliError::config(format!("target hour {h} is not in 0..24"))),
        None => TargetAggregation::DailyMean,
    };
    let raw = load_csv(hourly, Granularity::Hourly)?;
    let daily = aggregate_daily(&clean(&raw)?, &FeatureCatalog::standard(), target)?;
    write_atomic(out, to_csv_string(&daily)?.as_bytes())?;
    Ok(vec![out.to_path_buf()])
}

pub fn synth(seed: u64, days: usize, out: &Path, meta: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let generated = synth_generate(&mut RngState::new(seed), days, &SynthConfig::default())?;
    write_atomic(out, to_csv_string(&generated.table)?.as_bytes())?;
    let mut written = vec![out.to_path_buf()];
    if let Some(meta) = meta {
        write_json(meta, &generated.meta)?;
        written.push(meta.to_path_buf());
    }
    Ok(written)
}
