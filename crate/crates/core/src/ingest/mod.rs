//! PhysioNet-style ingestion: parsing, forward filling, SAD risk scores and
//! exogenous summaries.

pub mod exogenous;
pub mod fill;
pub mod record;
pub mod sad;

use serde::{Deserialize, Serialize};

pub use exogenous::{build_exogenous, default_vital_roster, ExogenousSeries, Summary};
pub use fill::{forward_fill, FillConfig, FillReport};
pub use record::{parse_psv, RawRecord};
pub use sad::{abnormality_indicators, build_sad_series, default_rules, SadGroup, SadRule, SadSeries};

use crate::error::Result;
use crate::panel::PatientPanel;

/// Patient filter applied before building panels (e.g. sex = 0 and age > 60).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub sex: Option<u8>,
    pub min_age_exclusive: Option<f64>,
}

impl Subgroup {
    pub fn matches(&self, record: &RawRecord) -> bool {
        if let Some(sex) = self.sex {
            if record.first_value("Gender") != Some(f64::from(sex)) {
                return false;
            }
        }
        if let Some(age) = self.min_age_exclusive {
            if !record.first_value("Age").is_some_and(|a| a > age) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub fill: FillConfig,
    pub window_hours: u32,
    /// Include Age and Gender as static covariates.
    pub include_demographics: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { fill: FillConfig::default(), window_hours: 6, include_demographics: false }
    }
}

/// Parsed record -> panel: MAP derivation, forward fill with row dropping,
/// SAD scores (plus SepsisLabel) as nodes, vital summaries, lab count and
/// ICULOS as exogenous series.
pub fn build_panel(
    record: &RawRecord,
    rules: &[SadRule],
    config: &IngestConfig,
) -> Result<(PatientPanel, FillReport)> {
    let mut rec = record.clone();
    rec.derive_map();
    let (filled, report) = forward_fill(&rec, &config.fill);
    let sad = build_sad_series(&filled, rules)?;
    let exo = build_exogenous(&filled, config.window_hours, &default_vital_roster());
    let t = filled.len();
    let mut mask = vec![vec![true; t]; sad.scores.len()];
    mask.extend(exo.valid.iter().cloned());
    let (static_labels, z) = if config.include_demographics {
        (
            vec!["Age".to_string(), "Gender".to_string()],
            vec![
                filled.first_value("Age").or(record.first_value("Age")).unwrap_or(0.0),
                filled.first_value("Gender").or(record.first_value("Gender")).unwrap_or(0.0),
            ],
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let panel = PatientPanel {
        id: record.patient_id.clone(),
        node_labels: sad.labels,
        exo_labels: exo.labels,
        static_labels,
        hours: filled.rows.iter().map(|r| r.hour).collect(),
        y: sad.scores,
        x: exo.series,
        z,
        mask,
    };
    panel.validate()?;
    Ok((panel, report))
}
