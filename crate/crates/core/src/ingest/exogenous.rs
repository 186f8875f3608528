use serde::{Deserialize, Serialize};

use super::record::{is_lab_column, RawRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Summary {
    Max,
    Min,
    Mean,
}

impl Summary {
    fn label(self) -> &'static str {
        match self {
            Summary::Max => "max",
            Summary::Min => "min",
            Summary::Mean => "mean",
        }
    }

    fn apply(self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        Some(match self {
            Summary::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Summary::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Summary::Mean => values.iter().sum::<f64>() / values.len() as f64,
        })
    }
}

/// Default vital summary roster: max/min/mean of HR, O2Sat, Temp and MAP,
/// plus mean and min of Resp.
pub fn default_vital_roster() -> Vec<(String, Summary)> {
    let mut roster = Vec::new();
    for v in ["HR", "O2Sat", "Temp", "MAP"] {
        for s in [Summary::Max, Summary::Min, Summary::Mean] {
            roster.push((v.to_string(), s));
        }
    }
    roster.push(("Resp".to_string(), Summary::Mean));
    roster.push(("Resp".to_string(), Summary::Min));
    roster
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousSeries {
    pub labels: Vec<String>,
    pub series: Vec<Vec<f64>>,
    /// false where a summary had no value in its window.
    pub valid: Vec<Vec<bool>>,
}

/// Trailing-window vital summaries, the lab-report count and ICULOS.
///
/// The window at hour `h` covers rows with hour in `(h - window_hours, h]`.
/// The lab count counts reported (not filled) lab cells in the window.
pub fn build_exogenous(
    record: &RawRecord,
    window_hours: u32,
    roster: &[(String, Summary)],
) -> ExogenousSeries {
    let window = window_hours.max(1) as f64;
    let t_len = record.len();
    let mut labels = Vec::new();
    let mut series = Vec::new();
    let mut valid = Vec::new();

    let window_start = |t: usize| -> usize {
        let h = record.rows[t].hour;
        let mut s = t;
        while s > 0 && record.rows[s - 1].hour > h - window {
            s -= 1;
        }
        s
    };

    for (vital, summary) in roster {
        labels.push(format!("{vital} ({})", summary.label()));
        let col = record.column_index(vital);
        let mut out = vec![0.0; t_len];
        let mut ok = vec![false; t_len];
        if let Some(c) = col {
            for t in 0..t_len {
                let vals: Vec<f64> =
                    (window_start(t)..=t).filter_map(|s| record.value(s, c)).collect();
                if let Some(v) = summary.apply(&vals) {
                    out[t] = v;
                    ok[t] = true;
                }
            }
        }
        series.push(out);
        valid.push(ok);
    }

    let lab_cols: Vec<usize> = (0..record.columns.len())
        .filter(|&c| is_lab_column(&record.columns[c]))
        .collect();
    let per_row: Vec<f64> = (0..t_len)
        .map(|t| lab_cols.iter().filter(|&&c| record.reported(t, c)).count() as f64)
        .collect();
    labels.push("LabCount".to_string());
    series.push((0..t_len).map(|t| per_row[window_start(t)..=t].iter().sum()).collect());
    valid.push(vec![true; t_len]);

    labels.push("ICULOS".to_string());
    series.push(record.rows.iter().map(|r| r.hour).collect());
    valid.push(vec![true; t_len]);

    ExogenousSeries { labels, series, valid }
}
