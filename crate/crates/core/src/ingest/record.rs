//! Per-patient hourly records in the PhysioNet 2019 pipe-separated dialect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vital-sign columns, in file order.
pub const VITAL_COLUMNS: [&str; 8] = ["HR", "O2Sat", "Temp", "SBP", "MAP", "DBP", "Resp", "EtCO2"];

/// Laboratory columns, in file order.
pub const LAB_COLUMNS: [&str; 26] = [
    "BaseExcess",
    "HCO3",
    "FiO2",
    "pH",
    "PaCO2",
    "SaO2",
    "AST",
    "BUN",
    "Alkalinephos",
    "Calcium",
    "Chloride",
    "Creatinine",
    "Bilirubin_direct",
    "Glucose",
    "Lactate",
    "Magnesium",
    "Phosphate",
    "Potassium",
    "Bilirubin_total",
    "TroponinI",
    "Hct",
    "Hgb",
    "PTT",
    "WBC",
    "Fibrinogen",
    "Platelets",
];

/// Demographic and bookkeeping columns.
pub const OTHER_COLUMNS: [&str; 7] =
    ["Age", "Gender", "Unit1", "Unit2", "HospAdmTime", "ICULOS", "SepsisLabel"];

/// Canonical spelling of a column name (`"Bilirubin direct"` -> `"Bilirubin_direct"`).
pub fn canonical_column(name: &str) -> String {
    name.trim().replace(' ', "_")
}

pub fn is_known_column(name: &str) -> bool {
    let name = canonical_column(name);
    VITAL_COLUMNS
        .iter()
        .chain(LAB_COLUMNS.iter())
        .chain(OTHER_COLUMNS.iter())
        .any(|c| *c == name)
}

pub fn is_lab_column(name: &str) -> bool {
    LAB_COLUMNS.contains(&name)
}

/// A cell value together with the hour it was reported.
///
/// Forward filling copies values without changing `reported_at`, so a cell is
/// an original report exactly when `reported_at` equals the row's hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: f64,
    pub reported_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    /// ICULOS of the row (hours since ICU admission).
    pub hour: f64,
    pub cells: Vec<Option<Cell>>,
}

/// One patient's hourly observations over the known PhysioNet columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub patient_id: String,
    pub columns: Vec<String>,
    pub rows: Vec<RawRow>,
}

impl RawRecord {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        let name = canonical_column(name);
        self.columns.iter().position(|c| *c == name)
    }

    /// Value of `column` at row `t`, whether reported or filled.
    pub fn value(&self, t: usize, column: usize) -> Option<f64> {
        self.rows[t].cells[column].map(|c| c.value)
    }

    /// Whether `column` was actually reported at row `t` (not filled).
    pub fn reported(&self, t: usize, column: usize) -> bool {
        let row = &self.rows[t];
        matches!(row.cells[column], Some(c) if c.reported_at == row.hour)
    }

    /// First non-absent value of a column; used for static covariates.
    pub fn first_value(&self, name: &str) -> Option<f64> {
        let c = self.column_index(name)?;
        self.rows.iter().find_map(|r| r.cells[c].map(|cell| cell.value))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Adds a derived MAP = (SBP + 2 DBP) / 3 wherever MAP is absent and both
    /// cuff pressures were reported in the same row.
    pub fn derive_map(&mut self) {
        let (Some(sbp), Some(dbp)) = (self.column_index("SBP"), self.column_index("DBP")) else {
            return;
        };
        let map = match self.column_index("MAP") {
            Some(c) => c,
            None => {
                self.columns.push("MAP".to_string());
                for row in &mut self.rows {
                    row.cells.push(None);
                }
                self.columns.len() - 1
            }
        };
        for row in &mut self.rows {
            if row.cells[map].is_some() {
                continue;
            }
            if let (Some(s), Some(d)) = (row.cells[sbp], row.cells[dbp]) {
                if s.reported_at == row.hour && d.reported_at == row.hour {
                    row.cells[map] = Some(Cell {
                        value: (s.value + 2.0 * d.value) / 3.0,
                        reported_at: row.hour,
                    });
                }
            }
        }
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| Error::NonNumeric {
        row,
        column: column.to_string(),
        value: s.to_string(),
    })?;
    if v.is_nan() {
        Ok(None)
    } else {
        Ok(Some(v))
    }
}

/// A parsed pipe-separated table: header names and optional numeric cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// Reads a pipe-separated numeric table. Empty, `NaN` and `NA` cells are
/// absent. Row indices in errors are 1-based data rows (the header is row 0).
pub fn read_psv_table(text: &str) -> Result<PsvTable> {
    let table = read_psv_table_lenient(text)?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for (k, raw) in table.rows.into_iter().enumerate() {
        let row = raw
            .into_iter()
            .zip(&table.header)
            .map(|(cell, name)| match cell {
                LenientCell::Value(v) => Ok(v),
                LenientCell::Bad(value) => {
                    Err(Error::NonNumeric { row: k + 1, column: name.clone(), value })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(PsvTable { header: table.header, rows })
}

/// Parses one PhysioNet patient file.
///
/// Unknown columns are skipped, whatever they contain. Without an ICULOS column, hours are taken as 1, 2, 3, ...
pub fn parse_psv(patient_id: &str, text: &str) -> Result<RawRecord> {
    let table = read_psv_table_lenient(text)?;
    let kept: Vec<usize> =
        (0..table.header.len()).filter(|&i| is_known_column(&table.header[i])).collect();
    let columns: Vec<String> = kept.iter().map(|&i| table.header[i].clone()).collect();
    let iculos = columns.iter().position(|c| c == "ICULOS");
    let sepsis = columns.iter().position(|c| c == "SepsisLabel");
    let gender = columns.iter().position(|c| c == "Gender");

    let mut rows: Vec<RawRow> = Vec::with_capacity(table.rows.len());
    for (k, raw) in table.rows.into_iter().enumerate() {
        let row_idx = k + 1;
        let mut values = Vec::with_capacity(kept.len());
        for &i in &kept {
            values.push(match &raw[i] {
                LenientCell::Value(v) => *v,
                LenientCell::Bad(text) => {
                    return Err(Error::NonNumeric {
                        row: row_idx,
                        column: table.header[i].clone(),
                        value: text.clone(),
                    })
                }
            });
        }
        let hour = match iculos {
            Some(c) => values[c]
                .ok_or(Error::Parse { row: row_idx, message: "missing ICULOS".into() })?,
            None => row_idx as f64,
        };
        if let Some(prev) = rows.last() {
            if hour <= prev.hour {
                return Err(Error::Parse {
                    row: row_idx,
                    message: format!(
                        "ICULOS {hour} not strictly increasing (previous {})",
                        prev.hour
                    ),
                });
            }
        }
        for (col, label) in [(sepsis, "SepsisLabel"), (gender, "Gender")] {
            if let Some(v) = col.and_then(|c| values[c]) {
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Parse {
                        row: row_idx,
                        message: format!("{label} must be 0 or 1, found {v}"),
                    });
                }
            }
        }
        let cells = values
            .into_iter()
            .map(|v| v.map(|value| Cell { value, reported_at: hour }))
            .collect();
        rows.push(RawRow { hour, cells });
    }
    Ok(RawRecord { patient_id: patient_id.to_string(), columns, rows })
}

enum LenientCell {
    Value(Option<f64>),
    Bad(String),
}

struct LenientTable {
    header: Vec<String>,
    rows: Vec<Vec<LenientCell>>,
}

// Like `read_psv_table`, but defers non-numeric errors so that junk in
// ignored columns does not reject the file.
fn read_psv_table_lenient(text: &str) -> Result<LenientTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line =
        lines.next().ok_or(Error::Parse { row: 0, message: "missing header".into() })?;
    let header: Vec<String> = header_line.split('|').map(canonical_column).collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row_idx = k + 1;
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != header.len() {
            return Err(Error::Parse {
                row: row_idx,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        rows.push(
            fields
                .iter()
                .zip(&header)
                .map(|(f, name)| match parse_cell(f, row_idx, name) {
                    Ok(v) => LenientCell::Value(v),
                    Err(_) => LenientCell::Bad(f.trim().to_string()),
                })
                .collect(),
        );
    }
    Ok(LenientTable { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_fields_directly() {
        let r = parse_psv("p", "HR|O2Sat|SepsisLabel\n80|97|0\n").unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.value(0, r.column_index("HR").unwrap()), Some(80.0));
        assert_eq!(r.value(0, r.column_index("O2Sat").unwrap()), Some(97.0));
        assert_eq!(r.value(0, r.column_index("SepsisLabel").unwrap()), Some(0.0));
    }

    #[test]
    fn missing_cells_are_absent() {
        let r = parse_psv("p", "HR|Temp|ICULOS\n80|NaN|1\n81||2\n").unwrap();
        let t = r.column_index("Temp").unwrap();
        assert_eq!(r.value(0, t), None);
        assert_eq!(r.value(1, t), None);
    }

    #[test]
    fn unknown_columns_ignored() {
        let r = parse_psv("p", "HR|Mystery|ICULOS\n80|abc|1\n").unwrap();
        assert_eq!(r.columns, vec!["HR", "ICULOS"]);
    }

    #[test]
    fn spaced_names_are_canonicalised() {
        let r = parse_psv("p", "Bilirubin direct|ICULOS\n0.5|1\n").unwrap();
        assert!(r.column_index("Bilirubin_direct").is_some());
    }

    #[test]
    fn row_length_error_names_row() {
        let err = parse_psv("p", "HR|ICULOS\n80|1\n81\n").unwrap_err();
        assert_eq!(err, Error::Parse { row: 2, message: "expected 2 fields, found 1".into() });
    }

    #[test]
    fn non_numeric_names_column() {
        let err = parse_psv("p", "HR|Temp|ICULOS\n80|warm|1\n").unwrap_err();
        match err {
            Error::NonNumeric { column, row, .. } => {
                assert_eq!(column, "Temp");
                assert_eq!(row, 1);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn iculos_must_increase() {
        assert!(parse_psv("p", "HR|ICULOS\n80|2\n81|2\n").is_err());
        assert!(parse_psv("p", "SepsisLabel|ICULOS\n2|1\n").is_err());
    }

    #[test]
    fn derives_map_from_cuff_pressures() {
        let mut r = parse_psv("p", "SBP|DBP|ICULOS\n120|60|1\n").unwrap();
        r.derive_map();
        let m = r.column_index("MAP").unwrap();
        assert_eq!(r.value(0, m), Some(80.0));
    }
}
