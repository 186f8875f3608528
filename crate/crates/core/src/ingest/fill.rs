use serde::{Deserialize, Serialize};

use super::record::{canonical_column, RawRecord};

/// Columns the default model reads; rows missing any of them after filling
/// are dropped.
pub const DEFAULT_REQUIRED: [&str; 5] = ["HR", "O2Sat", "Temp", "MAP", "Resp"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillConfig {
    pub horizon_hours: u32,
    pub required_columns: Vec<String>,
}

impl Default for FillConfig {
    fn default() -> Self {
        Self {
            horizon_hours: 24,
            required_columns: DEFAULT_REQUIRED.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillReport {
    pub rows_before: usize,
    pub rows_after: usize,
}

/// Forward-fills absent cells from the most recent report no older than
/// `horizon_hours`, then drops rows where a required column is still absent.
///
/// Filled cells keep the hour of the original report, so filling twice is the
/// same as filling once and filled values never propagate beyond the horizon
/// of their source.
pub fn forward_fill(record: &RawRecord, config: &FillConfig) -> (RawRecord, FillReport) {
    let horizon = config.horizon_hours.max(1) as f64;
    let mut out = record.clone();
    for c in 0..out.columns.len() {
        let mut last = None;
        for row in &mut out.rows {
            match row.cells[c] {
                Some(cell) => {
                    // keep the freshest report even if this cell was itself filled
                    last = Some(match last {
                        Some(prev) if prev_is_newer(prev, cell) => prev,
                        _ => cell,
                    });
                }
                None => {
                    if let Some(src) = last {
                        if row.hour - src.reported_at <= horizon {
                            row.cells[c] = Some(src);
                        }
                    }
                }
            }
        }
    }
    let required: Vec<usize> = config
        .required_columns
        .iter()
        .map(|n| canonical_column(n))
        .filter_map(|n| out.column_index(&n))
        .collect();
    // a required column the file does not carry at all drops every row
    let missing_column = config
        .required_columns
        .iter()
        .any(|n| out.column_index(n).is_none());
    let rows_before = out.rows.len();
    out.rows.retain(|row| !missing_column && required.iter().all(|&c| row.cells[c].is_some()));
    let rows_after = out.rows.len();
    (out, FillReport { rows_before, rows_after })
}

fn prev_is_newer(prev: super::record::Cell, cell: super::record::Cell) -> bool {
    prev.reported_at > cell.reported_at
}
