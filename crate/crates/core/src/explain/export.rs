//! Global importance ranking and per-feature dependence tables built from
//! many local explanations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::shap::ShapExplanation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub index: usize,
    pub feature: String,
    pub mean_abs_phi: f64,
}

/// Features by mean |φ| descending, ties broken by index.
pub fn importance_ranking(explanations: &[ShapExplanation], names: &[String]) -> Vec<Importance> {
    let d = names.len();
    let mut totals = vec![0.0; d];
    for e in explanations {
        for (t, p) in totals.iter_mut().zip(&e.phi) {
            *t += p.abs();
        }
    }
    let k = explanations.len().max(1) as f64;
    let mut ranked: Vec<Importance> = totals
        .into_iter()
        .enumerate()
        .map(|(index, t)| Importance {
            index,
            feature: names[index].clone(),
            mean_abs_phi: t / k,
        })
        .collect();
    ranked.sort_by(|a, b| b.mean_abs_phi.total_cmp(&a.mean_abs_phi).then(a.index.cmp(&b.index)));
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceRow {
    pub value: f64,
    pub phi: f64,
    pub interaction_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceTable {
    pub feature: String,
    pub interaction: Option<String>,
    pub rows: Vec<DependenceRow>,
}

impl DependenceTable {
    /// Columns `feature,value,phi` plus `interaction_value` when a partner
    /// feature is set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,value,phi");
        if self.interaction.is_some() {
            out.push_str(",interaction_value");
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{},{}", self.feature, r.value, r.phi).unwrap();
            if let Some(v) = r.interaction_value {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn abs_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).abs()
    }
}

/// Partner for `feature`: the other feature whose values correlate most
/// strongly (in absolute value) with `feature`'s attributions.
pub fn default_interaction(explanations: &[ShapExplanation], feature: usize) -> Option<usize> {
    let d = explanations.first()?.phi.len();
    let phi: Vec<f64> = explanations.iter().map(|e| e.phi[feature]).collect();
    let mut best: Option<(usize, f64)> = None;
    for k in (0..d).filter(|&k| k != feature) {
        let xs: Vec<f64> = explanations.iter().map(|e| e.instance[k]).collect();
        let c = abs_correlation(&phi, &xs);
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k)
}

/// Dependence data for one feature. `interaction: None` picks the partner
/// with [`default_interaction`].
pub fn dependence_export(
    explanations: &[ShapExplanation],
    names: &[String],
    feature: &str,
    interaction: Option<&str>,
) -> Result<DependenceTable> {
    let find = |name: &str| {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::schema(format!("unknown feature {name:?}")))
    };
    let j = find(feature)?;
    let partner = match interaction {
        Some(name) => Some(find(name)?),
        None => default_interaction(explanations, j),
    };
    let rows = explanations
        .iter()
        .map(|e| DependenceRow {
            value: e.instance[j],
            phi: e.phi[j],
            interaction_value: partner.map(|k| e.instance[k]),
        })
        .collect();
    Ok(DependenceTable {
        feature: feature.to_string(),
        interaction: partner.map(|k| names[k].clone()),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expl(phi: Vec<f64>, instance: Vec<f64>) -> ShapExplanation {
        ShapExplanation {
            phi,
            base: 0.0,
            prediction: 0.0,
            instance,
            background_rows: 1,
            coalitions: 0,
        }
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("F{}", j + 1)).collect()
    }

    #[test]
    fn single_explanation_ranking() {
        let r = importance_ranking(&[expl(vec![0.1, -0.5, 0.3], vec![0.0; 3])], &names(3));
        assert_eq!(r.iter().map(|i| i.index).collect::<Vec<_>>(), vec![1, 2, 0]);
        assert_eq!(r[0].feature, "F2");
    }

    #[test]
    fn zero_attributions_keep_index_order() {
        let r = importance_ranking(&[expl(vec![0.0; 4], vec![0.0; 4])], &names(4));
        assert_eq!(r.iter().map(|i| i.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn dependence_rows_and_partner() {
        let ex: Vec<_> = (0..5)
            .map(|i| {
                let v = i as f64;
                expl(vec![2.0 * v, 0.0, 0.0], vec![v, 1.0, 10.0 - v])
            })
            .collect();
        let t = dependence_export(&ex, &names(3), "F1", None).unwrap();
        assert_eq!(t.rows.len(), 5);
        assert_eq!(t.interaction.as_deref(), Some("F3"));
        let t = dependence_export(&ex, &names(3), "F1", Some("F2")).unwrap();
        assert!(t.rows.iter().all(|r| r.interaction_value == Some(1.0)));
        let csv = t.to_csv();
        assert!(csv.starts_with("feature,value,phi,interaction_value\nF1,0,0,1\n"));
        assert!(matches!(
            dependence_export(&ex, &names(3), "F9", None),
            Err(Error::Schema(_))
        ));
    }
}
