use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::{Attr, Dataset, PersonRecord, Sex};
use crate::error::{Error, Result};

/// Maps each census column to the header used in a particular file.
///
/// The default is the identity mapping onto the canonical column names
/// (`state,county,tract,block,hhgq,sex,age,hispanic,race`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap(BTreeMap<Attr, String>);

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap(Attr::COLUMNS.iter().map(|&a| (a, a.name().to_string())).collect())
    }
}

impl ColumnMap {
    /// Overrides the header for `attr`.
    pub fn rename(mut self, attr: Attr, header: impl Into<String>) -> Self {
        self.0.insert(attr, header.into());
        self
    }

    pub fn header(&self, attr: Attr) -> &str {
        self.0.get(&attr).map(String::as_str).unwrap_or(attr.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub delimiter: char,
    pub columns: ColumnMap,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: ',',
            columns: ColumnMap::default(),
        }
    }
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::Config(format!("delimiter {c:?} must be a single ASCII character")))
}

/// Reads a headered delimited microdata file into a dataset.
pub fn load_microdata(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_microdata(file, options)
}

/// Same as [`load_microdata`] over any reader.
pub fn read_microdata(reader: impl Read, options: &LoadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(options.delimiter)?)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 9];
    for (slot, &attr) in index.iter_mut().zip(Attr::COLUMNS.iter()) {
        let name = options.columns.header(attr);
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Malformed {
            row: row_no,
            reason: e.to_string(),
        })?;
        let field = |k: usize| row.get(index[k]).unwrap_or("").trim();
        let record = parse_record(row_no, &field)?;
        if let Err((attr, value)) = record.check_domains() {
            return Err(Error::Domain {
                row: row_no,
                column: options.columns.header(attr).to_string(),
                value,
            });
        }
        records.push(record);
    }
    Ok(Dataset::census(records))
}

fn parse_record<'a>(row: usize, field: &dyn Fn(usize) -> &'a str) -> Result<PersonRecord> {
    let domain = |k: usize| Error::Domain {
        row,
        column: Attr::COLUMNS[k].name().to_string(),
        value: field(k).to_string(),
    };
    let int = |k: usize| -> Result<u64> {
        let s = field(k);
        if s.is_empty() {
            return Err(Error::Malformed {
                row,
                reason: format!("empty `{}` field", Attr::COLUMNS[k]),
            });
        }
        match s.parse::<i64>() {
            Ok(v) if v >= 0 => Ok(v as u64),
            Ok(_) => Err(domain(k)),
            Err(_) => Err(Error::Malformed {
                row,
                reason: format!("`{}` field {s:?} is not an integer", Attr::COLUMNS[k]),
            }),
        }
    };
    let narrow = |k: usize, max: u64| -> Result<u64> {
        let v = int(k)?;
        if v > max {
            Err(domain(k))
        } else {
            Ok(v)
        }
    };
    let sex = match field(5).to_ascii_lowercase().as_str() {
        "1" | "m" | "male" => Sex::Male,
        "2" | "f" | "female" => Sex::Female,
        _ => return Err(domain(5)),
    };
    let hispanic = match field(7).to_ascii_lowercase().as_str() {
        "1" | "not_hispanic" | "n" => false,
        "2" | "hispanic" | "y" => true,
        _ => return Err(domain(7)),
    };
    Ok(PersonRecord {
        state: narrow(0, u16::MAX as u64)? as u16,
        county: narrow(1, u16::MAX as u64)? as u16,
        tract: narrow(2, u32::MAX as u64)? as u32,
        block: narrow(3, u16::MAX as u64)? as u16,
        hhgq: narrow(4, u8::MAX as u64)? as u8,
        sex,
        age: narrow(6, u8::MAX as u64)? as u8,
        hispanic,
        race: narrow(8, u8::MAX as u64)? as u8,
    })
}

/// Writes a dataset in the canonical layout: sex and hispanic use the
/// 1/2 codes (male/female, not Hispanic/Hispanic).
pub fn export_microdata(dataset: &Dataset, path: impl AsRef<Path>, delimiter: char) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_microdata(dataset, file, delimiter)
}

pub fn write_microdata(dataset: &Dataset, writer: impl Write, delimiter: char) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter_byte(delimiter)?)
        .from_writer(writer);
    w.write_record(Attr::COLUMNS.iter().map(|a| a.name()))?;
    for r in dataset.records() {
        w.write_record([
            r.state.to_string(),
            r.county.to_string(),
            r.tract.to_string(),
            r.block.to_string(),
            r.hhgq.to_string(),
            (r.sex.index() + 1).to_string(),
            r.age.to_string(),
            if r.hispanic { "2" } else { "1" }.to_string(),
            r.race.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<microdata writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "state,county,tract,block,hhgq,sex,age,hispanic,race\n";

    #[test]
    fn three_rows_load() {
        let text = format!("{HEADER}1,1,20100,1000,0,1,0,1,1\n1,1,20100,1000,0,2,34,2,2\n1,1,20100,1001,3,male,80,hispanic,17\n");
        let d = read_microdata(text.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.records()[2].race, 17);
        assert!(d.records()[2].hispanic);
    }

    #[test]
    fn out_of_domain_age_names_row_and_value() {
        let text = format!("{HEADER}1,1,20100,1000,0,1,0,1,1\n1,1,20100,1000,0,1,200,1,1\n");
        match read_microdata(text.as_bytes(), &LoadOptions::default()) {
            Err(Error::Domain { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "age", "200"));
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_malformed_rows() {
        let text = "state,county,tract,block,hhgq,sex,age,hispanic\n1,1,1,1,0,1,3,1\n";
        assert!(matches!(
            read_microdata(text.as_bytes(), &LoadOptions::default()),
            Err(Error::MissingColumn(c)) if c == "race"
        ));
        let text = format!("{HEADER}1,1,1,1,0,1,x,1,1\n");
        assert!(matches!(
            read_microdata(text.as_bytes(), &LoadOptions::default()),
            Err(Error::Malformed { row: 1, .. })
        ));
        let text = format!("{HEADER}1,1,1,1,0,1\n");
        assert!(matches!(
            read_microdata(text.as_bytes(), &LoadOptions::default()),
            Err(Error::Malformed { row: 1, .. })
        ));
    }

    #[test]
    fn column_map_and_delimiter() {
        let text = "TABBLKST|TABBLKCOU|TABTRACTCE|TABBLK|GQTYPE|QSEX|QAGE|CENHISP|CENRACE\n01|001|020100|1000|0|2|45|1|03\n";
        let opts = LoadOptions {
            delimiter: '|',
            columns: ColumnMap::default()
                .rename(Attr::State, "TABBLKST")
                .rename(Attr::County, "TABBLKCOU")
                .rename(Attr::Tract, "TABTRACTCE")
                .rename(Attr::Block, "TABBLK")
                .rename(Attr::Hhgq, "GQTYPE")
                .rename(Attr::Sex, "QSEX")
                .rename(Attr::Age, "QAGE")
                .rename(Attr::Hispanic, "CENHISP")
                .rename(Attr::Race, "CENRACE"),
        };
        let d = read_microdata(text.as_bytes(), &opts).unwrap();
        assert_eq!(d.records()[0].tract, 20100);
        assert_eq!(d.records()[0].race, 3);
        assert_eq!(d.records()[0].sex, Sex::Female);
    }
}
