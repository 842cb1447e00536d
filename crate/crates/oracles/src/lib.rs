//! Independent reference checks for the forecasting library.
//!
//! Every [`OracleCase`] runs a procedure that compares library output with a
//! naive re-derivation (or counts failures of a planted-solution check) and
//! reports the worst deviation, which must not exceed the case tolerance.

pub mod cases;
pub mod naive;

use std::fmt::Write as _;
use std::time::Instant;

use epf_core::par;

pub type Procedure = fn(u64) -> cases::Outcome;

#[derive(Debug, Clone, Copy)]
pub struct OracleCase {
    pub name: &'static str,
    pub module: &'static str,
    pub seed: u64,
    pub tolerance: f64,
    pub procedure: Procedure,
}

/// All registered cases.
pub fn registry() -> Vec<OracleCase> {
    let case = |module, name, seed, tolerance, procedure| OracleCase {
        name,
        module,
        seed,
        tolerance,
        procedure,
    };
    vec![
        case(
            "eval",
            "metrics_formulas",
            1,
            1e-10,
            cases::metrics_formulas as Procedure,
        ),
        case("eval", "metrics_properties", 2, 0.0, cases::metrics_properties),
        case("eval", "dm_against_naive", 3, 1e-8, cases::dm_against_naive),
        case("eval", "dm_antisymmetry", 4, 1e-12, cases::dm_antisymmetry),
        case("eval", "dm_calibration", 5, 0.02, cases::dm_calibration),
        case("eval", "dm_degenerate", 6, 0.0, cases::dm_degenerate),
        case("neural", "lstm_gradient", 100, 1e-4, cases::lstm_gradient),
        case("neural", "lstm_zero_params", 7, 0.0, cases::lstm_zero_params),
        case("neural", "lstm_naive_forward", 8, 1e-12, cases::lstm_naive_forward),
        case("featsel", "pso_velocity_replay", 9, 0.0, cases::pso_velocity_replay),
        case("featsel", "pso_planted", 200, 0.0, cases::pso_planted),
        case("featsel", "ga_planted", 300, 0.0, cases::ga_planted),
        case("featsel", "rfe_planted", 400, 0.0, cases::rfe_planted),
        case("featsel", "lasso_orthonormal", 10, 1e-6, cases::lasso_orthonormal),
        case("featsel", "lasso_ols", 11, 1e-6, cases::lasso_ols),
        case("featsel", "svr_bruteforce", 12, 1e-4, cases::svr_bruteforce),
        case("dataio", "flow_deviation", 13, 1e-12, cases::flow_deviation_cases),
        case("explain", "kernel_shap_exact", 14, 1e-3, cases::kernel_shap_exact),
        case(
            "explain",
            "kernel_shap_sampled_linear",
            15,
            1e-8,
            cases::kernel_shap_sampled_linear,
        ),
        case("explain", "shap_axioms", 16, 1e-9, cases::shap_axioms),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseOutcome {
    pub name: String,
    pub module: String,
    pub seed: u64,
    pub tolerance: f64,
    /// Worst deviation, absent when the procedure itself failed.
    pub deviation: Option<f64>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl CaseOutcome {
    pub fn passed(&self) -> bool {
        self.deviation.is_some_and(|d| d <= self.tolerance)
    }

    fn detail(&self) -> String {
        match (&self.deviation, &self.error) {
            (Some(d), _) => format!("deviation {d:.3e} (tolerance {:.1e})", self.tolerance),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "no result".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub outcomes: Vec<CaseOutcome>,
}

impl OracleReport {
    pub fn failures(&self) -> Vec<&CaseOutcome> {
        self.outcomes.iter().filter(|o| !o.passed()).collect()
    }

    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(CaseOutcome::passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            let status = if o.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(
                s,
                "{status} {}::{} seed={} {} [{:.2}s]",
                o.module,
                o.name,
                o.seed,
                o.detail(),
                o.seconds
            );
        }
        let failed = self.failures().len();
        let _ = writeln!(s, "{} passed, {failed} failed", self.outcomes.len() - failed);
        s
    }

    pub fn to_junit_xml(&self) -> String {
        let total: f64 = self.outcomes.iter().map(|o| o.seconds).sum();
        let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            s,
            "<testsuite name=\"oracles\" tests=\"{}\" failures=\"{}\" time=\"{total:.3}\">",
            self.outcomes.len(),
            self.failures().len()
        );
        for o in &self.outcomes {
            let _ = write!(
                s,
                "  <testcase classname=\"{}\" name=\"{}\" time=\"{:.3}\"",
                escape(&o.module),
                escape(&o.name),
                o.seconds
            );
            if o.passed() {
                s.push_str("/>\n");
            } else {
                let _ = writeln!(
                    s,
                    ">\n    <failure message=\"{}\"/>\n  </testcase>",
                    escape(&o.detail())
                );
            }
        }
        s.push_str("</testsuite>\n");
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn run_case(case: &OracleCase) -> CaseOutcome {
    let start = Instant::now();
    let result = (case.procedure)(case.seed);
    let (deviation, error) = match result {
        Ok(d) if d.is_finite() => (Some(d), None),
        Ok(d) => (None, Some(format!("non-finite deviation {d}"))),
        Err(e) => (None, Some(e)),
    };
    CaseOutcome {
        name: case.name.to_string(),
        module: case.module.to_string(),
        seed: case.seed,
        tolerance: case.tolerance,
        deviation,
        error,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_cases(cases: &[OracleCase]) -> OracleReport {
    OracleReport {
        outcomes: par::map_slice(cases, run_case),
    }
}

/// Runs every case whose module equals `filter` or whose name contains it;
/// `None` runs everything.
pub fn run_oracles(filter: Option<&str>) -> OracleReport {
    let selected: Vec<OracleCase> = registry()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| c.module == f || c.name.contains(f)))
        .collect();
    run_cases(&selected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(name: &'static str, procedure: Procedure) -> OracleCase {
        OracleCase {
            name,
            module: "test",
            seed: 0,
            tolerance: 0.5,
            procedure,
        }
    }

    #[test]
    fn outcomes_and_exports() {
        let report = run_cases(&[
            fake("ok", |_| Ok(0.1)),
            fake("over", |_| Ok(0.9)),
            fake("broken <x>", |_| Err("boom".into())),
            fake("nan", |_| Ok(f64::NAN)),
        ]);
        let names: Vec<&str> = report.failures().iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["over", "broken <x>", "nan"]);
        let xml = report.to_junit_xml();
        assert!(xml.contains("tests=\"4\" failures=\"3\""));
        assert!(xml.contains("broken &lt;x&gt;"));
        assert!(report.to_text().ends_with("1 passed, 3 failed\n"));
    }

    #[test]
    fn registry_names_unique() {
        let mut names: Vec<_> = registry().iter().map(|c| c.name).collect();
        names.sort();
        let before = names.len();
        names.dedup();
        assert_eq!(before, names.len());
    }
}
