use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Runs the reference checks and reports per-case deviations.
#[derive(Parser)]
#[command(name = "epf-oracles")]
struct Args {
    /// Module name (eval, neural, featsel, dataio, explain) or case-name substring.
    #[arg(long)]
    filter: Option<String>,
    /// Also write a JUnit XML report here.
    #[arg(long)]
    junit: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let report = epf_oracles::run_oracles(args.filter.as_deref());
    print!("{}", report.to_text());
    if let Some(path) = &args.junit {
        if let Err(e) = std::fs::write(path, report.to_junit_xml()) {
            eprintln!("cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if report.outcomes.is_empty() {
        eprintln!("no oracle case matches the filter");
        return ExitCode::from(2);
    }
    let failed: Vec<&str> = report.failures().iter().map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing cases: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
