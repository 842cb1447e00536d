use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use epf_core::dataio::{load_csv, Granularity};
use epf_core::explain::{dependence_export, explain_table, ExplainConfig, ExplainReport};
use epf_core::featsel::FeatureMask;
use epf_core::numkernel::RngState;
use epf_core::splits::initial_division;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{read_json, read_text, resolve_out_dir, write_atomic, write_json};

pub const IMPORTANCE_FILE: &str = "importance.json";

pub struct ExplainArgs<'a> {
    pub data: &'a Path,
    pub mask: &'a Path,
    pub config: Option<&'a Path>,
    pub seed: u64,
    pub feature: Option<&'a str>,
    pub interaction: Option<&'a str>,
    pub out: Option<&'a Path>,
}

#[derive(Serialize)]
struct ExplainFile<'a> {
    config: &'a ExplainConfig,
    seed: u64,
    report: &'a ExplainReport,
}

fn shap_csv(report: &ExplainReport) -> String {
    let mut out = String::from("target_row,base,prediction");
    for f in &report.features {
        write!(out, ",phi_{f}").unwrap();
    }
    out.push('\n');
    for (e, t) in report.explanations.iter().zip(report.target_rows.clone()) {
        write!(out, "{t},{},{}", e.base, e.prediction).unwrap();
        for p in &e.phi {
            write!(out, ",{p}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Explains the test block of the 80-10-10 division with a surrogate SVR fitted
/// on its training block.
pub fn explain(args: &ExplainArgs<'_>) -> CliResult<Vec<PathBuf>> {
    let config: ExplainConfig = match args.config {
        Some(p) => read_json(p).map_err(|e| CliError::config(e.message))?,
        None => ExplainConfig::default(),
    };
    let mask = FeatureMask::from_json(&read_text(args.mask)?)?;
    let table = load_csv(args.data, Granularity::Daily)?;
    let division = initial_division(table.len())?;
    let report = explain_table(
        &table,
        &mask,
        division.train,
        division.test,
        &config,
        &RngState::new(args.seed),
    )?;

    let feature = match args.feature {
        Some(f) => f.to_string(),
        None => report.ranking[0].feature.clone(),
    };
    let dependence = dependence_export(&report.explanations, &report.features, &feature, args.interaction)?;

    let out_dir = resolve_out_dir(args.out, None);
    let paths = [
        out_dir.join("explain.json"),
        out_dir.join(IMPORTANCE_FILE),
        out_dir.join("shap_values.csv"),
        out_dir.join(format!("dependence_{feature}.csv")),
    ];
    write_json(
        &paths[0],
        &ExplainFile {
            config: &config,
            seed: args.seed,
            report: &report,
        },
    )?;
    write_json(&paths[1], &report.ranking)?;
    write_atomic(&paths[2], shap_csv(&report).as_bytes())?;
    write_atomic(&paths[3], dependence.to_csv().as_bytes())?;
    Ok(paths.to_vec())
}
