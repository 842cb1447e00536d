use std::path::{Path, PathBuf};

use epf_core::dataio::{fit_normalizer, load_csv, Granularity};
use epf_core::featsel::{checkmark_table, SelectorKind};
use epf_core::models::fold_mask;
use epf_core::numkernel::RngState;
use epf_core::splits::initial_division;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::io::{resolve_out_dir, write_atomic};

/// Fits the selector on the training block of the 80-10-10 division, writes
/// the mask JSON and a checkmark table next to it.
pub fn select(
    method: &str,
    data: &Path,
    config: Option<&Path>,
    seed: u64,
    out: Option<&Path>,
) -> CliResult<Vec<PathBuf>> {
    let kind = SelectorKind::parse(method)?;
    if kind == SelectorKind::All {
        return Err(CliError::config("select needs a selection method, not \"none\""));
    }
    let cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let table = load_csv(data, Granularity::Daily)?;
    let division = initial_division(table.len())?;
    let normalized = fit_normalizer(&table, division.train.clone())?.apply(&table)?;
    let mask = fold_mask(
        kind,
        &normalized,
        &division,
        &cfg.pipeline.selector,
        &RngState::new(seed),
    )?;

    let json_path = match out {
        Some(p) => p.to_path_buf(),
        None => resolve_out_dir(None, cfg.output_dir.as_deref()).join(format!("mask_{}.json", kind.tag())),
    };
    let text_path = json_path.with_extension("txt");
    let mut json = mask.to_json();
    json.push('\n');
    write_atomic(&json_path, json.as_bytes())?;
    write_atomic(&text_path, checkmark_table(&[(kind.tag(), &mask)]).as_bytes())?;
    Ok(vec![json_path, text_path])
}
