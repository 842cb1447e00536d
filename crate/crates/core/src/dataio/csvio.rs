use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::catalog::{capacity_column, FeatureId, FIRST_FLOW, N_BASE_FEATURES, N_INTERCONNECTORS, TARGET};
use super::table::{Granularity, Stamp, TimeSeriesTable};
use crate::error::{Error, Result};

/// Expected value columns (after `timestamp` and, for hourly files, `hour`).
pub fn schema_columns(granularity: Granularity) -> Vec<String> {
    match granularity {
        Granularity::Daily => FeatureId::all()
            .map(|f| f.to_string())
            .chain(std::iter::once(TARGET.to_string()))
            .collect(),
        Granularity::Hourly => (0..N_BASE_FEATURES)
            .map(|i| FeatureId::from_index(i).to_string())
            .chain(std::iter::once(TARGET.to_string()))
            .chain((0..N_INTERCONNECTORS).map(|i| capacity_column(FeatureId::from_index(FIRST_FLOW + i))))
            .collect(),
    }
}

fn key_columns(granularity: Granularity) -> &'static [&'static str] {
    match granularity {
        Granularity::Daily => &["timestamp"],
        Granularity::Hourly => &["timestamp", "hour"],
    }
}

pub fn load_csv(path: impl AsRef<Path>, granularity: Granularity) -> Result<TimeSeriesTable> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, granularity)
}

pub fn read_csv(reader: impl Read, granularity: Granularity) -> Result<TimeSeriesTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let keys = key_columns(granularity);
    let expected = schema_columns(granularity);

    for name in header.iter() {
        if !keys.contains(&name) && !expected.iter().any(|e| e == name) {
            return Err(Error::schema(format!("unknown column {name:?}")));
        }
    }
    let want: Vec<&str> = keys
        .iter()
        .copied()
        .chain(expected.iter().map(String::as_str))
        .collect();
    let got: Vec<&str> = header.iter().collect();
    if got != want {
        let missing: Vec<&str> = want.iter().filter(|w| !got.contains(w)).copied().collect();
        return Err(Error::schema(if missing.is_empty() {
            "columns out of order; expected the documented header".to_string()
        } else {
            format!("missing columns: {}", missing.join(","))
        }));
    }

    let n_keys = keys.len();
    let mut stamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); expected.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != want.len() {
            return Err(Error::Parse {
                line,
                message: format!("{} fields, expected {}", record.len(), want.len()),
            });
        }
        let date = NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date {:?}: {e}", &record[0]),
        })?;
        let stamp = match granularity {
            Granularity::Daily => Stamp::day(date),
            Granularity::Hourly => {
                let hour: u8 = record[1]
                    .trim()
                    .parse()
                    .ok()
                    .filter(|h| *h < 24)
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("bad hour {:?}", &record[1]),
                    })?;
                Stamp::hour(date, hour)
            }
        };
        if let Some(prev) = stamps.last() {
            let ok = match granularity {
                Granularity::Daily => stamp > *prev,
                // Repeated hours are daylight-saving duplicates, removed by cleaning.
                Granularity::Hourly => stamp >= *prev,
            };
            if !ok {
                return Err(Error::Ordering {
                    line,
                    stamp: stamp.to_string(),
                });
            }
        }
        stamps.push(stamp);
        for (c, field) in record.iter().skip(n_keys).enumerate() {
            let field = field.trim();
            let v = if field.is_empty() {
                f64::NAN
            } else {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("column {}: not a number: {field:?}", expected[c]),
                    })?
            };
            columns[c].push(v);
        }
    }
    TimeSeriesTable::new(granularity, stamps, expected, columns)
}

pub fn write_csv(table: &TimeSeriesTable, writer: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let keys = key_columns(table.granularity());
    let header: Vec<&str> = keys
        .iter()
        .copied()
        .chain(table.names().iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(csv_io)?;
    for (t, stamp) in table.stamps().iter().enumerate() {
        let mut row = vec![stamp.date.format("%Y-%m-%d").to_string()];
        if table.granularity() == Granularity::Hourly {
            row.push(stamp.hour.unwrap_or(0).to_string());
        }
        for col in table.columns() {
            let v = col[t];
            row.push(if v.is_nan() { String::new() } else { format!("{v}") });
        }
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(table: &TimeSeriesTable) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
