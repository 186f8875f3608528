//! Sepsis-associated derangement (SAD) rule table and risk-score series.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::record::{canonical_column, is_known_column, RawRecord};
use crate::error::{Error, Result};

const DEFAULT_RULES: &str = include_str!("../../resources/sad_rules.psv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SadGroup {
    RenalInjury,
    ElectrolyteImbalance,
    OxygenCarryingDysfunction,
    Shock,
    DiminishedCardiacOutput,
    Coagulopathy,
    Cholestasis,
    HepatocellularInjury,
    OxygenationDysfunction,
    Inflammation,
}

impl SadGroup {
    pub const ALL: [SadGroup; 10] = [
        SadGroup::RenalInjury,
        SadGroup::ElectrolyteImbalance,
        SadGroup::OxygenCarryingDysfunction,
        SadGroup::Shock,
        SadGroup::DiminishedCardiacOutput,
        SadGroup::Coagulopathy,
        SadGroup::Cholestasis,
        SadGroup::HepatocellularInjury,
        SadGroup::OxygenationDysfunction,
        SadGroup::Inflammation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SadGroup::RenalInjury => "Renal Injury",
            SadGroup::ElectrolyteImbalance => "Electrolyte Imbalance",
            SadGroup::OxygenCarryingDysfunction => "Oxygen Carrying Dysfunction",
            SadGroup::Shock => "Shock",
            SadGroup::DiminishedCardiacOutput => "Diminished Cardiac Output",
            SadGroup::Coagulopathy => "Coagulopathy",
            SadGroup::Cholestasis => "Cholestasis",
            SadGroup::HepatocellularInjury => "Hepatocellular Injury",
            SadGroup::OxygenationDysfunction => "Oxygenation Dysfunction",
            SadGroup::Inflammation => "Inflammation",
        }
    }
}

impl fmt::Display for SadGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SadGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        SadGroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown SAD group {s:?}")))
    }
}

/// Abnormality predicate: `value < below` or `value > above` (strict).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abnormality {
    pub below: Option<f64>,
    pub above: Option<f64>,
}

impl Abnormality {
    pub fn is_abnormal(&self, value: f64) -> bool {
        self.below.is_some_and(|b| value < b) || self.above.is_some_and(|a| value > a)
    }

    /// Parses `">1.3"`, `"<98 or >106"`, `"< -3"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rule = Abnormality { below: None, above: None };
        for part in text.split("or") {
            let part = part.trim();
            if !part.starts_with(['<', '>']) {
                return Err(Error::Config(format!("bad rule {text:?}")));
            }
            let (op, rest) = part.split_at(1);
            let value: f64 = rest
                .trim()
                .replace(',', "")
                .trim_end_matches('%')
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad threshold in rule {text:?}")))?;
            match op {
                "<" if rule.below.is_none() => rule.below = Some(value),
                ">" if rule.above.is_none() => rule.above = Some(value),
                _ => return Err(Error::Config(format!("bad rule {text:?}"))),
            }
        }
        Ok(rule)
    }
}

impl fmt::Display for Abnormality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.below, self.above) {
            (Some(b), Some(a)) => write!(f, "<{b} or >{a}"),
            (Some(b), None) => write!(f, "<{b}"),
            (None, Some(a)) => write!(f, ">{a}"),
            (None, None) => f.write_str("never"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SadRule {
    pub group: SadGroup,
    pub measurement: String,
    pub rule: Abnormality,
    pub risk_score: f64,
}

/// Parses a `group | measurement | rule | risk_score` table; `#` starts a comment.
///
/// Validates that every measurement is a known column and appears once, and
/// that each group's risk scores sum to 1 within 0.01.
pub fn parse_rule_table(text: &str) -> Result<Vec<SadRule>> {
    let mut rules = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Config(format!("rule line {}: expected 4 fields", lineno + 1)));
        }
        let risk_score: f64 = fields[3]
            .parse()
            .map_err(|_| Error::Config(format!("rule line {}: bad risk score", lineno + 1)))?;
        if !(0.0..=1.0).contains(&risk_score) {
            return Err(Error::Config(format!("rule line {}: risk score outside [0,1]", lineno + 1)));
        }
        rules.push(SadRule {
            group: fields[0].parse()?,
            measurement: canonical_column(fields[1]),
            rule: Abnormality::parse(fields[2])?,
            risk_score,
        });
    }
    validate_rules(&rules)?;
    Ok(rules)
}

pub fn validate_rules(rules: &[SadRule]) -> Result<()> {
    for (i, r) in rules.iter().enumerate() {
        if !is_known_column(&r.measurement) {
            return Err(Error::Config(format!("unknown measurement {:?}", r.measurement)));
        }
        if rules[..i].iter().any(|o| o.measurement == r.measurement) {
            return Err(Error::Config(format!("measurement {:?} listed twice", r.measurement)));
        }
    }
    for g in SadGroup::ALL {
        let members: Vec<_> = rules.iter().filter(|r| r.group == g).collect();
        if members.is_empty() {
            continue;
        }
        let total: f64 = members.iter().map(|r| r.risk_score).sum();
        if (total - 1.0).abs() > 0.01 {
            return Err(Error::Config(format!("risk scores of {g} sum to {total}")));
        }
    }
    Ok(())
}

/// The bundled rule table.
pub fn default_rules() -> Vec<SadRule> {
    parse_rule_table(DEFAULT_RULES).expect("bundled SAD rule table is valid")
}

/// Risk-score series: one per SAD group present in the rules (in
/// [`SadGroup::ALL`] order) followed by SepsisLabel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SadSeries {
    pub labels: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

/// Score of a group at hour t = sum of risk scores of members abnormal at t.
/// Absent measurements are treated as normal.
pub fn build_sad_series(record: &RawRecord, rules: &[SadRule]) -> Result<SadSeries> {
    validate_rules(rules)?;
    let t_len = record.len();
    let groups: Vec<SadGroup> =
        SadGroup::ALL.into_iter().filter(|g| rules.iter().any(|r| r.group == *g)).collect();
    let mut labels: Vec<String> = groups.iter().map(|g| g.name().to_string()).collect();
    let mut scores = vec![vec![0.0; t_len]; groups.len()];
    for rule in rules {
        let gi = groups.iter().position(|g| *g == rule.group).unwrap();
        let Some(c) = record.column_index(&rule.measurement) else { continue };
        for (t, score) in scores[gi].iter_mut().enumerate() {
            if let Some(v) = record.value(t, c) {
                if rule.rule.is_abnormal(v) {
                    *score += rule.risk_score;
                }
            }
        }
    }
    labels.push("SepsisLabel".to_string());
    let sepsis = match record.column_index("SepsisLabel") {
        Some(c) => (0..t_len).map(|t| record.value(t, c).unwrap_or(0.0)).collect(),
        None => vec![0.0; t_len],
    };
    scores.push(sepsis);
    Ok(SadSeries { labels, scores })
}

/// Binary series per rule measurement: 1 when the measurement was reported at
/// that hour and is abnormal.
pub fn abnormality_indicators(record: &RawRecord, rules: &[SadRule]) -> (Vec<String>, Vec<Vec<f64>>) {
    let labels = rules.iter().map(|r| r.measurement.clone()).collect();
    let series = rules
        .iter()
        .map(|rule| match record.column_index(&rule.measurement) {
            Some(c) => (0..record.len())
                .map(|t| {
                    let hit = record.reported(t, c)
                        && record.value(t, c).is_some_and(|v| rule.rule.is_abnormal(v));
                    f64::from(u8::from(hit))
                })
                .collect(),
            None => vec![0.0; record.len()],
        })
        .collect();
    (labels, series)
}
