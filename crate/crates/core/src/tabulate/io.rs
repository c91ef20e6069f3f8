use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::query::Workload;
use super::{TableInstance, UnitTables};
use crate::datamodel::GeoUnit;
use crate::error::{Error, Result};

/// Writes one wide CSV per workload (`<dir>/<NAME>.csv`): a `unit` column
/// followed by one column per cell label, one row per unit in unit order.
pub fn write_tables(dir: impl AsRef<Path>, workloads: &[Workload], tables: &[UnitTables]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for w in workloads {
        let path = dir.join(format!("{}.csv", w.name));
        let mut out = csv::Writer::from_path(&path)?;
        let mut header = vec!["unit".to_string()];
        header.extend(w.labels().map(str::to_string));
        out.write_record(&header)?;
        for ut in tables {
            if let Some(t) = ut.get(&w.name) {
                let mut row = vec![ut.unit.to_string()];
                row.extend(t.counts.iter().map(i64::to_string));
                out.write_record(&row)?;
            }
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads the files written by [`write_tables`]. Workloads without a file are
/// skipped; a header that does not match the workload's labels is an error.
pub fn read_tables(dir: impl AsRef<Path>, workloads: &[Workload]) -> Result<Vec<UnitTables>> {
    let dir = dir.as_ref();
    let mut units: BTreeMap<GeoUnit, UnitTables> = BTreeMap::new();
    for w in workloads {
        let path = dir.join(format!("{}.csv", w.name));
        if !path.exists() {
            continue;
        }
        let mut rdr = csv::Reader::from_path(&path)?;
        let header = rdr.headers()?.clone();
        let expected: Vec<&str> = std::iter::once("unit").chain(w.labels()).collect();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Config(format!(
                "{} does not match the cell layout of table {}",
                path.display(),
                w.name
            )));
        }
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let unit: GeoUnit = row[0].parse()?;
            let counts = row
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim().parse::<i64>().map_err(|_| Error::Malformed {
                        row: i + 1,
                        reason: format!("{}: count {v:?} is not an integer", path.display()),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            units
                .entry(unit)
                .or_insert_with(|| UnitTables {
                    unit,
                    tables: BTreeMap::new(),
                })
                .tables
                .insert(
                    w.name.clone(),
                    TableInstance {
                        workload: w.name.clone(),
                        unit,
                        counts,
                    },
                );
        }
    }
    Ok(units.into_values().collect())
}
