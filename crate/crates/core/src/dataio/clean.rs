use super::table::TimeSeriesTable;
use crate::error::{Error, Result};

/// Drops repeated stamps (daylight-saving duplicates, first occurrence kept)
/// and fills interior gaps by linear interpolation over row position.
pub fn clean(table: &TimeSeriesTable) -> Result<TimeSeriesTable> {
    let (granularity, stamps, names, columns) = table.clone().into_parts();

    let keep: Vec<usize> = (0..stamps.len())
        .filter(|&i| i == 0 || stamps[i] != stamps[i - 1])
        .collect();
    let stamps: Vec<_> = keep.iter().map(|&i| stamps[i]).collect();
    let mut out = Vec::with_capacity(columns.len());
    for (name, col) in names.iter().zip(columns) {
        let mut col: Vec<f64> = keep.iter().map(|&i| col[i]).collect();
        interpolate(&mut col).map_err(|edge| Error::IncompleteSeries {
            column: name.clone(),
            edge,
        })?;
        out.push(col);
    }
    TimeSeriesTable::new(granularity, stamps, names, out)
}

/// Linear interpolation of NaN runs between present neighbours.
pub fn interpolate(values: &mut [f64]) -> std::result::Result<(), &'static str> {
    if values.is_empty() {
        return Ok(());
    }
    if values[0].is_nan() {
        return Err("leading");
    }
    if values[values.len() - 1].is_nan() {
        return Err("trailing");
    }
    let mut last = 0;
    for i in 1..values.len() {
        if values[i].is_nan() {
            continue;
        }
        let gap = i - last;
        if gap > 1 {
            let (a, b) = (values[last], values[i]);
            for k in 1..gap {
                values[last + k] = a + (b - a) * k as f64 / gap as f64;
            }
        }
        last = i;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::table::{Granularity, Stamp};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn hourly(hours: &[u8], values: Vec<f64>) -> TimeSeriesTable {
        let d = NaiveDate::from_ymd_opt(2020, 10, 25).unwrap();
        TimeSeriesTable::new(
            Granularity::Hourly,
            hours.iter().map(|&h| Stamp::hour(d, h)).collect(),
            vec!["target".into()],
            vec![values],
        )
        .unwrap()
    }

    #[test]
    fn midpoint_gap() {
        let mut v = [1.0, f64::NAN, 3.0];
        interpolate(&mut v).unwrap();
        assert_eq!(v, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn three_step_gap() {
        let mut v = [1.0, f64::NAN, f64::NAN, 4.0];
        interpolate(&mut v).unwrap();
        assert_eq!(v, [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn edges_are_errors() {
        let err = clean(&hourly(&[0, 1], vec![f64::NAN, 1.0])).unwrap_err();
        assert!(matches!(err, Error::IncompleteSeries { edge: "leading", .. }));
        let err = clean(&hourly(&[0, 1], vec![1.0, f64::NAN])).unwrap_err();
        assert!(matches!(err, Error::IncompleteSeries { edge: "trailing", .. }));
    }

    #[test]
    fn dst_duplicate_keeps_first() {
        let t = clean(&hourly(&[1, 2, 2, 3], vec![10.0, 20.0, 99.0, 30.0])).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.target().unwrap(), &[10.0, 20.0, 30.0]);
    }

    proptest! {
        #[test]
        fn idempotent(raw in proptest::collection::vec(proptest::option::weighted(0.7, -50.0f64..50.0), 2..40),
                      dups in proptest::collection::vec(0usize..3, 2..40)) {
            let mut values: Vec<f64> = raw.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            let n = values.len();
            values[0] = 1.0;
            values[n - 1] = 2.0;
            // Repeat some hours to mimic duplicates.
            let mut hours = Vec::new();
            let mut vals = Vec::new();
            for (i, v) in values.iter().enumerate() {
                let reps = if i == 0 { 1 } else { 1 + dups[i % dups.len()] % 2 };
                for _ in 0..reps {
                    hours.push(i as u8);
                    vals.push(*v);
                }
            }
            let once = clean(&hourly(&hours, vals)).unwrap();
            let twice = clean(&once).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
