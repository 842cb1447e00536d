use serde::{Deserialize, Serialize};

use super::data::SelectionData;
use super::mask::{FeatureMask, SelectorKind};
use super::svr::svr_fit;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfeConfig {
    pub k: usize,
    pub drop_per_round: usize,
    pub c: f64,
    pub epsilon: f64,
}

impl Default for RfeConfig {
    fn default() -> Self {
        RfeConfig {
            k: 30,
            drop_per_round: 1,
            c: 1.0,
            epsilon: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeResult {
    pub mask: FeatureMask,
    /// Features in the order they were discarded.
    pub eliminated: Vec<usize>,
}

/// Recursive elimination by `|w_j|` of a linear SVR refitted on the survivors.
/// Scores rank features by survival: discarded features score their
/// elimination position (1 for the first), survivors score above all of them
/// by final `|w_j|`.
pub fn rfe_svr_select(data: &SelectionData, config: &RfeConfig) -> Result<RfeResult> {
    let d = data.n_features();
    let k = config.k.min(d);
    let step = config.drop_per_round.max(1);
    let mut alive: Vec<usize> = (0..d).collect();
    let mut eliminated = Vec::new();
    let mut last_w: Vec<f64> = vec![0.0; d];
    while alive.len() > k {
        let sub = SelectionData::new(data.x.select_columns(&alive), data.y.clone())?;
        let model = svr_fit(&sub, config.c, config.epsilon)?;
        let mut order: Vec<usize> = (0..alive.len()).collect();
        // Smallest |w| first; ties drop the higher index first.
        order.sort_by(|&a, &b| {
            model.w[a]
                .abs()
                .total_cmp(&model.w[b].abs())
                .then(alive[b].cmp(&alive[a]))
        });
        let n_drop = step.min(alive.len() - k);
        let mut drop: Vec<usize> = order[..n_drop].to_vec();
        eliminated.extend(drop.iter().map(|&p| alive[p]));
        drop.sort_unstable_by(|a, b| b.cmp(a));
        for p in drop {
            alive.remove(p);
        }
    }
    if !alive.is_empty() {
        let sub = SelectionData::new(data.x.select_columns(&alive), data.y.clone())?;
        let model = svr_fit(&sub, config.c, config.epsilon)?;
        for (p, &j) in alive.iter().enumerate() {
            last_w[j] = model.w[p].abs();
        }
    }
    let mut scores = vec![0.0; d];
    for (pos, &j) in eliminated.iter().enumerate() {
        scores[j] = (pos + 1) as f64;
    }
    let top = last_w.iter().cloned().fold(0.0, f64::max);
    for &j in &alive {
        let rel = if top > 0.0 { last_w[j] / top } else { 0.0 };
        scores[j] = (eliminated.len() + 1) as f64 + rel;
    }
    let mask = FeatureMask::from_indices(&alive, SelectorKind::RfeSvr)?.with_scores(scores);
    Ok(RfeResult { mask, eliminated })
}
