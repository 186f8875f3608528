//! Aligned mixed-type series for one patient (or one simulated run).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::record::read_psv_table;

/// Node series `y` (risk scores or binary), exogenous series `x`, static
/// covariates `z`, and a per-(series, t) validity mask over `y` then `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientPanel {
    pub id: String,
    pub node_labels: Vec<String>,
    pub exo_labels: Vec<String>,
    pub static_labels: Vec<String>,
    pub hours: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub mask: Vec<Vec<bool>>,
}

impl PatientPanel {
    /// Builds a panel with every entry valid and hours 1..=T.
    pub fn new(id: impl Into<String>, y: Vec<Vec<f64>>, x: Vec<Vec<f64>>, z: Vec<f64>) -> Result<Self> {
        let t = y.first().or(x.first()).map_or(0, Vec::len);
        let panel = Self {
            id: id.into(),
            node_labels: (0..y.len()).map(|i| format!("y{i}")).collect(),
            exo_labels: (0..x.len()).map(|i| format!("x{i}")).collect(),
            static_labels: (0..z.len()).map(|i| format!("z{i}")).collect(),
            hours: (1..=t).map(|h| h as f64).collect(),
            mask: vec![vec![true; t]; y.len() + x.len()],
            y,
            x,
            z,
        };
        panel.validate()?;
        Ok(panel)
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.y.len()
    }

    pub fn n_exo(&self) -> usize {
        self.x.len()
    }

    pub fn n_static(&self) -> usize {
        self.z.len()
    }

    pub fn node_valid(&self, j: usize, t: usize) -> bool {
        self.mask[j][t]
    }

    pub fn exo_valid(&self, j: usize, t: usize) -> bool {
        self.mask[self.y.len() + j][t]
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.len();
        let bad = |what: &str| Err(Error::InvalidArgument(format!("panel {}: {what}", self.id)));
        if self.node_labels.len() != self.y.len()
            || self.exo_labels.len() != self.x.len()
            || self.static_labels.len() != self.z.len()
        {
            return bad("label count mismatch");
        }
        if self.y.iter().chain(&self.x).any(|s| s.len() != t) {
            return bad("series lengths differ");
        }
        if self.mask.len() != self.y.len() + self.x.len() || self.mask.iter().any(|m| m.len() != t) {
            return bad("mask shape mismatch");
        }
        for (j, s) in self.y.iter().enumerate() {
            for (k, &v) in s.iter().enumerate() {
                if self.mask[j][k] && !(0.0..=1.0 + 0.011).contains(&v) {
                    return bad("node series outside [0, 1]");
                }
            }
        }
        Ok(())
    }

    /// Sub-panel over the time steps in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let cut = |v: &Vec<f64>| v[range.clone()].to_vec();
        Self {
            id: self.id.clone(),
            node_labels: self.node_labels.clone(),
            exo_labels: self.exo_labels.clone(),
            static_labels: self.static_labels.clone(),
            hours: cut(&self.hours),
            y: self.y.iter().map(cut).collect(),
            x: self.x.iter().map(cut).collect(),
            z: self.z.clone(),
            mask: self.mask.iter().map(|m| m[range.clone()].to_vec()).collect(),
        }
    }

    /// Same series vocabulary (labels) as `other`.
    pub fn same_vocabulary(&self, other: &PatientPanel) -> bool {
        self.node_labels == other.node_labels
            && self.exo_labels == other.exo_labels
            && self.static_labels == other.static_labels
    }

    /// Writes the panel in the pipe-separated dialect: `ICULOS`, node
    /// series, exogenous series, then statics repeated on every row.
    /// Masked entries are written as `NaN`.
    pub fn to_psv(&self) -> String {
        let mut out = String::new();
        let mut header = vec!["ICULOS".to_string()];
        header.extend(self.node_labels.iter().cloned());
        header.extend(self.exo_labels.iter().cloned());
        header.extend(self.static_labels.iter().cloned());
        out.push_str(&header.join("|"));
        out.push('\n');
        for t in 0..self.len() {
            let mut fields = vec![format_num(self.hours[t])];
            for (j, s) in self.y.iter().enumerate() {
                fields.push(if self.mask[j][t] { format_num(s[t]) } else { "NaN".into() });
            }
            for (j, s) in self.x.iter().enumerate() {
                let ok = self.mask[self.y.len() + j][t];
                fields.push(if ok { format_num(s[t]) } else { "NaN".into() });
            }
            fields.extend(self.z.iter().map(|&v| format_num(v)));
            out.push_str(&fields.join("|"));
            out.push('\n');
        }
        out
    }

    /// Reads a panel written by [`PatientPanel::to_psv`], given how many of
    /// the columns after ICULOS are node, exogenous and static series.
    pub fn from_psv(id: &str, text: &str, n_nodes: usize, n_exo: usize, n_static: usize) -> Result<Self> {
        let table = read_psv_table(text)?;
        if table.header.len() != 1 + n_nodes + n_exo + n_static || table.header[0] != "ICULOS" {
            return Err(Error::Parse { row: 0, message: "unexpected panel header".into() });
        }
        let label = |r: std::ops::Range<usize>| table.header[r].to_vec();
        let t = table.rows.len();
        let mut hours = Vec::with_capacity(t);
        let mut y = vec![vec![0.0; t]; n_nodes];
        let mut x = vec![vec![0.0; t]; n_exo];
        let mut mask = vec![vec![true; t]; n_nodes + n_exo];
        for (k, row) in table.rows.iter().enumerate() {
            hours.push(row[0].ok_or(Error::Parse { row: k + 1, message: "missing ICULOS".into() })?);
            for j in 0..n_nodes + n_exo {
                let target = if j < n_nodes { &mut y[j][k] } else { &mut x[j - n_nodes][k] };
                match row[1 + j] {
                    Some(v) => *target = v,
                    None => mask[j][k] = false,
                }
            }
        }
        let z = match table.rows.first() {
            Some(row) => row[1 + n_nodes + n_exo..].iter().map(|v| v.unwrap_or(0.0)).collect(),
            None => vec![0.0; n_static],
        };
        let panel = Self {
            id: id.to_string(),
            node_labels: label(1..1 + n_nodes),
            exo_labels: label(1 + n_nodes..1 + n_nodes + n_exo),
            static_labels: label(1 + n_nodes + n_exo..table.header.len()),
            hours,
            y,
            x,
            z,
            mask,
        };
        panel.validate()?;
        Ok(panel)
    }
}

fn format_num(v: f64) -> String {
    // shortest representation that round-trips
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn psv_round_trip(
            t in 1usize..20,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<Vec<f64>> = (0..2).map(|_| (0..t).map(|_| f64::from(u8::from(rng.gen_bool(0.3)))).collect()).collect();
            let x: Vec<Vec<f64>> = vec![(0..t).map(|_| rng.gen_range(-3.0..3.0)).collect()];
            let mut p = PatientPanel::new("p", y, x, vec![rng.gen_range(20.0..90.0)]).unwrap();
            p.mask[2][0] = false;
            p.x[0][0] = 0.0;
            let back = PatientPanel::from_psv("p", &p.to_psv(), 2, 1, 1).unwrap();
            prop_assert_eq!(back, p);
        }
    }

    #[test]
    fn rejects_out_of_range_nodes() {
        assert!(PatientPanel::new("p", vec![vec![2.0]], vec![], vec![]).is_err());
    }
}
