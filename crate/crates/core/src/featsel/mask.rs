use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataio::{FeatureId, N_FEATURES};
use crate::error::{Error, Result};

/// Selection method that produced a mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    /// No selection: all 62 features.
    #[serde(rename = "none")]
    All,
    Pc,
    PsoElm,
    GaElm,
    RfeSvr,
    Lasso,
}

impl SelectorKind {
    pub const METHODS: [SelectorKind; 5] = [
        SelectorKind::Pc,
        SelectorKind::PsoElm,
        SelectorKind::GaElm,
        SelectorKind::RfeSvr,
        SelectorKind::Lasso,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SelectorKind::All => "none",
            SelectorKind::Pc => "pc",
            SelectorKind::PsoElm => "pso-elm",
            SelectorKind::GaElm => "ga-elm",
            SelectorKind::RfeSvr => "rfe-svr",
            SelectorKind::Lasso => "lasso",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        [
            SelectorKind::All,
            SelectorKind::Pc,
            SelectorKind::PsoElm,
            SelectorKind::GaElm,
            SelectorKind::RfeSvr,
            SelectorKind::Lasso,
        ]
        .into_iter()
        .find(|k| k.tag() == tag)
        .ok_or_else(|| Error::config(format!("unknown selection method {tag:?}")))
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Boolean selection over the 62-feature catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMask {
    bits: Vec<bool>,
    pub method: SelectorKind,
    /// Per-feature ranking value, where the method defines one.
    pub scores: Option<Vec<f64>>,
}

impl FeatureMask {
    pub fn all() -> Self {
        FeatureMask {
            bits: vec![true; N_FEATURES],
            method: SelectorKind::All,
            scores: None,
        }
    }

    pub fn from_bits(bits: Vec<bool>, method: SelectorKind) -> Result<Self> {
        if bits.len() != N_FEATURES {
            return Err(Error::shape(format!("mask of {} bits", bits.len())));
        }
        Ok(FeatureMask {
            bits,
            method,
            scores: None,
        })
    }

    pub fn from_indices(indices: &[usize], method: SelectorKind) -> Result<Self> {
        let mut bits = vec![false; N_FEATURES];
        for &i in indices {
            if i >= N_FEATURES {
                return Err(Error::shape(format!("feature index {i}")));
            }
            bits[i] = true;
        }
        FeatureMask::from_bits(bits, method)
    }

    pub fn with_scores(mut self, scores: Vec<f64>) -> Self {
        debug_assert_eq!(scores.len(), N_FEATURES);
        self.scores = Some(scores);
        self
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_selected(&self, id: FeatureId) -> bool {
        self.bits[id.index()]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Selected catalog indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        (0..N_FEATURES).filter(|&i| self.bits[i]).collect()
    }

    pub fn selected(&self) -> Vec<FeatureId> {
        self.indices().into_iter().map(FeatureId::from_index).collect()
    }

    pub fn same_selection(&self, other: &FeatureMask) -> bool {
        self.bits == other.bits
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mask serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Wire form: `{method, selected: ["F1", ...], scores: {"F1": ..}}`, with
/// scores written in catalog order.
impl Serialize for FeatureMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;

        struct Scores<'a>(&'a [f64]);
        impl Serialize for Scores<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                use serde::ser::SerializeMap;
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (i, v) in self.0.iter().enumerate() {
                    m.serialize_entry(&FeatureId::from_index(i).to_string(), v)?;
                }
                m.end()
            }
        }

        let mut st = s.serialize_struct("FeatureMask", 3)?;
        st.serialize_field("method", &self.method)?;
        st.serialize_field("selected", &self.selected())?;
        match &self.scores {
            Some(sc) => st.serialize_field("scores", &Scores(sc))?,
            None => st.serialize_field("scores", &serde_json::Map::new())?,
        }
        st.end()
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            method: SelectorKind,
            selected: Vec<FeatureId>,
            #[serde(default)]
            scores: HashMap<FeatureId, f64>,
        }
        let w = Wire::deserialize(d)?;
        let idx: Vec<usize> = w.selected.iter().map(|f| f.index()).collect();
        let mut mask = FeatureMask::from_indices(&idx, w.method).map_err(serde::de::Error::custom)?;
        if !w.scores.is_empty() {
            let mut scores = vec![0.0; N_FEATURES];
            for (id, v) in w.scores {
                scores[id.index()] = v;
            }
            mask.scores = Some(scores);
        }
        Ok(mask)
    }
}

/// Checkmark table with one row per feature and one column per mask.
pub fn checkmark_table(masks: &[(&str, &FeatureMask)]) -> String {
    let mut out = String::from("Feature");
    for (label, _) in masks {
        out.push_str(&format!(" | {label:^7}"));
    }
    out.push('\n');
    for id in FeatureId::all() {
        out.push_str(&format!("{:<7}", id.to_string()));
        for (_, m) in masks {
            let mark = if m.is_selected(id) { "✓" } else { "" };
            out.push_str(&format!(" | {mark:^7}"));
        }
        out.push('\n');
    }
    out.push_str("Total  ");
    for (_, m) in masks {
        out.push_str(&format!(" | {:^7}", m.popcount()));
    }
    out.push('\n');
    out
}

/// Indices of the `k` largest scores; ties go to the lower index.
pub(crate) fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}
