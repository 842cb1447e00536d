use serde::{Deserialize, Serialize};

use super::data::SelectionData;
use super::elm::{ElmFitness, DEFAULT_HIDDEN};
use super::ga::{ga_run, GaConfig};
use super::lasso::{lasso_select, DEFAULT_LAMBDA};
use super::mask::{FeatureMask, SelectorKind};
use super::pearson::pearson_select;
use super::pso::{pso_binary, PsoConfig};
use super::rfe::{rfe_svr_select, RfeConfig};
use crate::error::{Error, Result};
use crate::numkernel::RngState;

pub const DEFAULT_K: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    pub k: usize,
    pub elm_hidden: usize,
    pub pso: PsoConfig,
    pub ga: GaConfig,
    pub rfe: RfeConfig,
    pub lasso_lambda: f64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            k: DEFAULT_K,
            elm_hidden: DEFAULT_HIDDEN,
            pso: PsoConfig::default(),
            ga: GaConfig::default(),
            rfe: RfeConfig::default(),
            lasso_lambda: DEFAULT_LAMBDA,
        }
    }
}

/// PSO-ELM wrapper; the selection data is re-split 80/20 for fitness.
pub fn pso_select(data: &SelectionData, config: &PsoConfig, hidden: usize, rng: &mut RngState) -> Result<FeatureMask> {
    let fitness = ElmFitness::new(data, hidden, rng)?;
    let r = pso_binary(data.n_features(), |m| fitness.evaluate(m), config, rng);
    FeatureMask::from_bits(r.best, SelectorKind::PsoElm)
}

/// GA-ELM wrapper; fitness as for [`pso_select`].
pub fn ga_select(data: &SelectionData, config: &GaConfig, hidden: usize, rng: &mut RngState) -> Result<FeatureMask> {
    let fitness = ElmFitness::new(data, hidden, rng)?;
    let r = ga_run(data.n_features(), |m| fitness.evaluate(m), None, config, rng);
    FeatureMask::from_bits(r.best, SelectorKind::GaElm)
}

/// Runs one selection method with cardinality `config.k`.
pub fn run_selector(
    kind: SelectorKind,
    data: &SelectionData,
    config: &SelectorConfig,
    rng: &RngState,
) -> Result<FeatureMask> {
    let k = config.k;
    if k == 0 || k > data.n_features() {
        return Err(Error::config(format!(
            "cannot select {k} of {} features",
            data.n_features()
        )));
    }
    let mut rng = rng.fork(kind as u64);
    let mask = match kind {
        SelectorKind::All => FeatureMask::all(),
        SelectorKind::Pc => pearson_select(data, k)?,
        SelectorKind::PsoElm => pso_select(
            data,
            &PsoConfig {
                k,
                ..config.pso.clone()
            },
            config.elm_hidden,
            &mut rng,
        )?,
        SelectorKind::GaElm => ga_select(data, &GaConfig { k, ..config.ga.clone() }, config.elm_hidden, &mut rng)?,
        SelectorKind::RfeSvr => {
            rfe_svr_select(
                data,
                &RfeConfig {
                    k,
                    ..config.rfe.clone()
                },
            )?
            .mask
        }
        SelectorKind::Lasso => lasso_select(data, config.lasso_lambda, k)?,
    };
    debug_assert!(kind == SelectorKind::All || mask.popcount() == k);
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_generate, SynthConfig};

    #[test]
    fn five_methods_thirty_bits_and_divergent() {
        let table = synth_generate(&mut RngState::new(5), 300, &SynthConfig::default())
            .unwrap()
            .table;
        let norm = crate::dataio::fit_normalizer(&table, 0..240).unwrap();
        let table = norm.apply(&table).unwrap();
        let data = SelectionData::lagged(&table, 0..240).unwrap();
        let config = SelectorConfig {
            pso: PsoConfig {
                iterations: 30,
                ..PsoConfig::default()
            },
            ga: GaConfig {
                generations: 30,
                ..GaConfig::default()
            },
            rfe: RfeConfig {
                drop_per_round: 4,
                ..RfeConfig::default()
            },
            ..SelectorConfig::default()
        };
        let rng = RngState::new(1);
        let masks: Vec<FeatureMask> = SelectorKind::METHODS
            .iter()
            .map(|&k| run_selector(k, &data, &config, &rng).unwrap())
            .collect();
        for m in &masks {
            assert_eq!(m.popcount(), 30, "{}", m.method);
        }
        assert!(masks.windows(2).any(|w| !w[0].same_selection(&w[1])));
        // Planted relevant features reach the filter and embedded masks.
        for j in [1, 16, 34] {
            assert!(masks[0].bits()[j], "pc misses F{}", j + 1);
            assert!(masks[4].bits()[j], "lasso misses F{}", j + 1);
        }
        let again = run_selector(SelectorKind::PsoElm, &data, &config, &rng).unwrap();
        assert_eq!(again, masks[1]);
    }
}
