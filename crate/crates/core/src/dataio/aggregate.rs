use std::collections::BTreeMap;

use super::catalog::{
    capacity_column, FeatureCatalog, FeatureId, FIRST_FLOW, FIRST_FLOW_DEVIATION, N_BASE_FEATURES, N_INTERCONNECTORS,
    TARGET,
};
use super::table::{Granularity, Stamp, TimeSeriesTable};
use crate::error::{Error, Result};

/// Root-mean-square deviation of hourly flow from expected exchange capacity
/// over the 24 hours of a day.
pub fn flow_deviation(hourly_flow: &[f64; 24], hourly_capacity: &[f64; 24]) -> f64 {
    let ss: f64 = hourly_flow
        .iter()
        .zip(hourly_capacity)
        .map(|(x, mu)| (x - mu) * (x - mu))
        .sum();
    (ss / 24.0).sqrt()
}

/// How the daily target is formed from the hourly target column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetAggregation {
    /// Arithmetic mean of the 24 hourly prices.
    #[default]
    DailyMean,
    /// The price of one delivery hour.
    Hour(u8),
}

/// Aggregates a cleaned hourly table to days: prices and exchange rates are
/// averaged, volumes and flows summed, and the eight flow deviations F55..F62
/// computed from each interconnector's flow and capacity columns.
pub fn aggregate_daily(
    table: &TimeSeriesTable,
    catalog: &FeatureCatalog,
    target: TargetAggregation,
) -> Result<TimeSeriesTable> {
    if table.granularity() != Granularity::Hourly {
        return Err(Error::config("aggregate_daily expects an hourly table"));
    }
    if table.has_missing() {
        return Err(Error::config("aggregate_daily expects a cleaned table"));
    }
    let mut days: BTreeMap<chrono::NaiveDate, Vec<usize>> = BTreeMap::new();
    for (i, s) in table.stamps().iter().enumerate() {
        days.entry(s.date).or_default().push(i);
    }
    for (date, rows) in &days {
        if rows.len() != 24 {
            return Err(Error::IncompleteDay {
                date: date.to_string(),
                found: rows.len(),
            });
        }
    }

    let mut names = Vec::new();
    let mut columns = Vec::new();
    for i in 0..N_BASE_FEATURES {
        let id = FeatureId::from_index(i);
        let col = table.feature(id)?;
        let averages = catalog.category(id).averages();
        names.push(id.to_string());
        columns.push(
            days.values()
                .map(|rows| {
                    let s: f64 = rows.iter().map(|&r| col[r]).sum();
                    if averages {
                        s / 24.0
                    } else {
                        s
                    }
                })
                .collect::<Vec<_>>(),
        );
    }
    for k in 0..N_INTERCONNECTORS {
        let flow_id = FeatureId::from_index(FIRST_FLOW + k);
        let flow = table.feature(flow_id)?;
        let cap = table.column(&capacity_column(flow_id))?;
        names.push(FeatureId::from_index(FIRST_FLOW_DEVIATION + k).to_string());
        columns.push(
            days.values()
                .map(|rows| {
                    let x: [f64; 24] = std::array::from_fn(|h| flow[rows[h]]);
                    let mu: [f64; 24] = std::array::from_fn(|h| cap[rows[h]]);
                    flow_deviation(&x, &mu)
                })
                .collect(),
        );
    }
    let price = table.target()?;
    names.push(TARGET.to_string());
    columns.push(
        days.values()
            .map(|rows| match target {
                TargetAggregation::DailyMean => rows.iter().map(|&r| price[r]).sum::<f64>() / 24.0,
                TargetAggregation::Hour(h) => rows
                    .iter()
                    .find(|&&r| table.stamps()[r].hour == Some(h))
                    .map_or(f64::NAN, |&r| price[r]),
            })
            .collect(),
    );
    let stamps = days.keys().map(|&d| Stamp::day(d)).collect();
    TimeSeriesTable::new(Granularity::Daily, stamps, names, columns)
}
