//! Reading stratum tables from CSV or JSON.
//!
//! Both formats hold exactly two rows of `stratum, x11, x10, x01`. The
//! dependent stratum (`a`) is the first row unless named explicitly.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DrsError, Result};
use crate::table::{DrsTable, StratumPair};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumRow {
    pub stratum: String,
    pub x11: i64,
    pub x10: i64,
    pub x01: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// From a file extension; anything other than `.json` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

pub fn read_rows<R: Read>(reader: R, format: Format) -> Result<Vec<StratumRow>> {
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
            rdr.deserialize()
                .collect::<std::result::Result<Vec<StratumRow>, _>>()
                .map_err(|e| DrsError::Parse(e.to_string()))
        }
        Format::Json => serde_json::from_reader(reader).map_err(|e| DrsError::Parse(e.to_string())),
    }
}

/// Builds the stratum pair. `dependent` names the stratum carrying
/// dependence (case-insensitive); `None` takes the first row.
pub fn pair_from_rows(rows: &[StratumRow], dependent: Option<&str>) -> Result<StratumPair> {
    if rows.len() != 2 {
        return Err(DrsError::Parse(format!("expected exactly 2 strata, found {}", rows.len())));
    }
    let first_is_a = match dependent {
        None => true,
        Some(name) => {
            let hit = |r: &StratumRow| r.stratum.eq_ignore_ascii_case(name);
            if hit(&rows[0]) {
                true
            } else if hit(&rows[1]) {
                false
            } else {
                return Err(DrsError::Parse(format!(
                    "dependent stratum '{name}' not found; strata are '{}' and '{}'",
                    rows[0].stratum, rows[1].stratum
                )));
            }
        }
    };
    let (ra, rb) = if first_is_a { (&rows[0], &rows[1]) } else { (&rows[1], &rows[0]) };
    let table = |r: &StratumRow| DrsTable::new(r.x11, r.x10, r.x01);
    StratumPair::labeled(table(ra)?, table(rb)?, ra.stratum.clone(), rb.stratum.clone())
}

pub fn load(path: &Path, dependent: Option<&str>) -> Result<StratumPair> {
    let file = std::fs::File::open(path).map_err(|e| DrsError::Parse(format!("{}: {e}", path.display())))?;
    let rows = read_rows(file, Format::from_path(path))?;
    pair_from_rows(&rows, dependent)
}

/// Writes both tables as CSV with an extra `total` (`x0`) column.
pub fn dump_csv<W: Write>(data: &StratumPair, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| DrsError::Parse(e.to_string());
    w.write_record(["stratum", "x11", "x10", "x01", "total"]).map_err(err)?;
    for (label, t) in [(&data.label_a, &data.a), (&data.label_b, &data.b)] {
        w.write_record([
            label.clone(),
            t.x11.to_string(),
            t.x10.to_string(),
            t.x01.to_string(),
            t.x0().to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| DrsError::Parse(e.to_string()))
}
