use epf_core::neural::Network;
use epf_core::numkernel::Matrix;
use epf_oracles::cases::{core_gradient, lstm_gradient_sweep};
use epf_oracles::{registry, run_oracles};

#[test]
fn every_case_passes() {
    let report = run_oracles(None);
    assert_eq!(report.outcomes.len(), registry().len());
    assert!(report.all_passed(), "{}", report.to_text());
}

#[test]
fn module_filter_runs_only_that_module() {
    let report = run_oracles(Some("neural"));
    let mut names: Vec<&str> = report.outcomes.iter().map(|o| o.name.as_str()).collect();
    names.sort();
    assert_eq!(names, ["lstm_gradient", "lstm_naive_forward", "lstm_zero_params"]);
    assert!(run_oracles(Some("no-such-case")).outcomes.is_empty());
}

#[test]
fn name_filter_matches_substrings() {
    let report = run_oracles(Some("planted"));
    assert_eq!(report.outcomes.len(), 3);
    assert!(report.outcomes.iter().all(|o| o.module == "featsel"));
}

#[test]
fn sign_flipped_lstm_gradient_is_caught() {
    let flipped = |net: &Network, p: &[f64], x: &Matrix, y: f64, g: &mut [f64]| {
        let loss = net.loss_and_grad(p, x, y, g)?;
        g[net.layer_params(0)].iter_mut().for_each(|v| *v = -*v);
        Ok(loss)
    };
    let gap = lstm_gradient_sweep(100, &flipped).unwrap();
    assert!(gap > 1e-4, "mutant passed with gap {gap}");
    assert!(lstm_gradient_sweep(100, &core_gradient).unwrap() < 1e-4);
}

#[test]
fn junit_lists_every_case() {
    let report = run_oracles(Some("dm_"));
    let xml = report.to_junit_xml();
    assert_eq!(xml.matches("<testcase ").count(), report.outcomes.len());
    assert!(xml.contains("failures=\"0\""));
}
