use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_FEATURES: usize = 62;
/// Features present in hourly input files (everything except the derived
/// flow deviations).
pub const N_BASE_FEATURES: usize = 54;
pub const TARGET: &str = "target";

/// Catalog id `F1`..`F62`, stored zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(u8);

impl FeatureId {
    pub fn new(number: usize) -> Result<Self> {
        if (1..=N_FEATURES).contains(&number) {
            Ok(FeatureId((number - 1) as u8))
        } else {
            Err(Error::schema(format!("feature id F{number} outside F1..F62")))
        }
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < N_FEATURES, "feature index {index}");
        FeatureId(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn number(self) -> usize {
        self.0 as usize + 1
    }

    pub fn all() -> impl Iterator<Item = FeatureId> {
        (0..N_FEATURES).map(FeatureId::from_index)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.number())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix('F')
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| Error::schema(format!("not a feature id: {s:?}")))
            .and_then(FeatureId::new)
    }
}

impl Serialize for FeatureId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Price,
    Production,
    ProductionPrognosis,
    Consumption,
    ConsumptionPrognosis,
    FxRate,
    Flow,
    FlowDeviation,
}

impl Category {
    /// Daily value is the mean of the hours (otherwise the sum).
    pub fn averages(self) -> bool {
        matches!(self, Category::Price | Category::FxRate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: FeatureId,
    pub description: &'static str,
    pub unit: &'static str,
    pub category: Category,
    pub source: &'static str,
}

const NP: &str = "Nord Pool";
const TR: &str = "Thomson Reuters Eikon";
const EN: &str = "Entsoe";
const CALC: &str = "Calculation";

use Category::*;

#[rustfmt::skip]
const RECORDS: [(&str, &str, Category, &str); N_FEATURES] = [
    ("System day-ahead price, 1-day lag", "EUR/MWh", Price, NP),
    ("SE1 day-ahead price", "EUR/MWh", Price, NP),
    ("SE2 day-ahead price", "EUR/MWh", Price, NP),
    ("SE3 day-ahead price", "EUR/MWh", Price, NP),
    ("SE4 day-ahead price", "EUR/MWh", Price, NP),
    ("FI day-ahead price", "EUR/MWh", Price, NP),
    ("DK1 day-ahead price", "EUR/MWh", Price, NP),
    ("DK2 day-ahead price", "EUR/MWh", Price, NP),
    ("NO1 day-ahead price", "EUR/MWh", Price, NP),
    ("NO2 day-ahead price", "EUR/MWh", Price, NP),
    ("NO3 day-ahead price", "EUR/MWh", Price, NP),
    ("NO4 day-ahead price", "EUR/MWh", Price, NP),
    ("NO5 day-ahead price", "EUR/MWh", Price, NP),
    ("EE day-ahead price", "EUR/MWh", Price, NP),
    ("LT day-ahead price", "EUR/MWh", Price, NP),
    ("PL day-ahead price", "PLN/MWh", Price, TR),
    ("DE day-ahead price", "EUR/MWh", Price, TR),
    ("NL day-ahead price", "EUR/MWh", Price, TR),
    ("Nordic production", "MWh", Production, NP),
    ("EE production", "MWh", Production, NP),
    ("LT production", "MWh", Production, NP),
    ("PL production", "MWh", Production, EN),
    ("DE production", "MWh", Production, EN),
    ("NL production", "MWh", Production, EN),
    ("Nordic production prognosis", "MWh", ProductionPrognosis, NP),
    ("EE production prognosis", "MWh", ProductionPrognosis, NP),
    ("LT production prognosis", "MWh", ProductionPrognosis, NP),
    ("PL production prognosis", "MWh", ProductionPrognosis, EN),
    ("DE production prognosis", "MWh", ProductionPrognosis, EN),
    ("NL production prognosis", "MWh", ProductionPrognosis, EN),
    ("Nordic consumption", "MWh", Consumption, NP),
    ("EE consumption", "MWh", Consumption, NP),
    ("LT consumption", "MWh", Consumption, NP),
    ("PL consumption", "MWh", Consumption, EN),
    ("DE consumption", "MWh", Consumption, EN),
    ("NL consumption", "MWh", Consumption, EN),
    ("Nordic consumption prognosis", "MWh", ConsumptionPrognosis, NP),
    ("EE consumption prognosis", "MWh", ConsumptionPrognosis, NP),
    ("LT consumption prognosis", "MWh", ConsumptionPrognosis, NP),
    ("PL consumption prognosis", "MWh", ConsumptionPrognosis, EN),
    ("DE consumption prognosis", "MWh", ConsumptionPrognosis, EN),
    ("NL consumption prognosis", "MWh", ConsumptionPrognosis, EN),
    ("EUR/NOK", "NOK per EUR", FxRate, NP),
    ("EUR/SEK", "SEK per EUR", FxRate, NP),
    ("EUR/DKK", "DKK per EUR", FxRate, NP),
    ("EUR/PLN", "PLN per EUR", FxRate, TR),
    ("NO2-NL flow", "MWh", Flow, NP),
    ("DK1-DE flow", "MWh", Flow, NP),
    ("DK2-DE flow", "MWh", Flow, NP),
    ("SE4-DE flow", "MWh", Flow, NP),
    ("SE4-PL flow", "MWh", Flow, NP),
    ("SE4-LT flow", "MWh", Flow, NP),
    ("FI-EE flow", "MWh", Flow, NP),
    ("FI-Russia flow", "MWh", Flow, NP),
    ("NO2-NL flow deviation", "MWh", FlowDeviation, CALC),
    ("DK1-DE flow deviation", "MWh", FlowDeviation, CALC),
    ("DK2-DE flow deviation", "MWh", FlowDeviation, CALC),
    ("SE4-DE flow deviation", "MWh", FlowDeviation, CALC),
    ("SE4-PL flow deviation", "MWh", FlowDeviation, CALC),
    ("SE4-LT flow deviation", "MWh", FlowDeviation, CALC),
    ("FI-EE flow deviation", "MWh", FlowDeviation, CALC),
    ("FI-Russia flow deviation", "MWh", FlowDeviation, CALC),
];

/// First flow column (F47); flows F47..F54 pair with deviations F55..F62.
pub const FIRST_FLOW: usize = 46;
pub const FIRST_FLOW_DEVIATION: usize = 54;
pub const N_INTERCONNECTORS: usize = 8;

/// The 62-feature catalog.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureCatalog {
    records: Vec<FeatureRecord>,
}

impl Default for FeatureCatalog {
    fn default() -> Self {
        FeatureCatalog::standard()
    }
}

impl FeatureCatalog {
    pub fn standard() -> Self {
        let records = RECORDS
            .iter()
            .enumerate()
            .map(|(i, &(description, unit, category, source))| FeatureRecord {
                id: FeatureId::from_index(i),
                description,
                unit,
                category,
                source,
            })
            .collect();
        FeatureCatalog { records }
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn get(&self, id: FeatureId) -> &FeatureRecord {
        &self.records[id.index()]
    }

    pub fn category(&self, id: FeatureId) -> Category {
        self.get(id).category
    }

    /// Category of a named column; the target is a price.
    pub fn category_of(&self, column: &str) -> Result<Category> {
        if column == TARGET {
            return Ok(Category::Price);
        }
        Ok(self.category(column.parse()?))
    }
}

pub fn feature_names() -> Vec<String> {
    FeatureId::all().map(|f| f.to_string()).collect()
}

/// Name of the expected-capacity column paired with a flow feature.
pub fn capacity_column(flow: FeatureId) -> String {
    format!("CAP_{flow}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_shape() {
        let cat = FeatureCatalog::standard();
        assert_eq!(cat.records().len(), 62);
        let ids: HashSet<_> = cat.records().iter().map(|r| r.id).collect();
        assert_eq!(ids.len(), 62);
        let cats: HashSet<_> = cat.records().iter().map(|r| r.category).collect();
        assert_eq!(cats.len(), 8);
        assert_eq!(cat.category(FeatureId::new(35).unwrap()), Category::Consumption);
        assert_eq!(cat.category(FeatureId::new(43).unwrap()), Category::FxRate);
        for i in 0..N_INTERCONNECTORS {
            assert_eq!(cat.records()[FIRST_FLOW + i].category, Category::Flow);
            assert_eq!(
                cat.records()[FIRST_FLOW_DEVIATION + i].category,
                Category::FlowDeviation
            );
        }
    }

    #[test]
    fn id_parsing() {
        assert_eq!("F17".parse::<FeatureId>().unwrap().index(), 16);
        assert!("F99".parse::<FeatureId>().is_err());
        assert!("F0".parse::<FeatureId>().is_err());
        assert!("X3".parse::<FeatureId>().is_err());
        assert_eq!(FeatureId::new(62).unwrap().to_string(), "F62");
    }
}
