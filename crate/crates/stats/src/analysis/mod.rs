//! Study analysis over a per-rating CSV export.
//!
//! One row per (visit, rater). Double-rated visits carry weight 0.5 per
//! physician row so each visit contributes one unit to weighted rates.
//! Column names are fixed; see [`COLUMNS`].

mod render;
mod tables;

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::StatsError;

pub use render::{render_text, write_tables};
pub use tables::{
    analyze, primary_effects, AgreementRow, BhRow, Effect, EffectRow, EffectTable, ErrorRateRow, RegressionTable,
    Report, StrataRow, StratumRate, Table2Row, GEE_MODEL, POISSON_MODEL,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("row {line}: {message}")]
    Row { line: u64, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    History,
    Investigations,
    Diagnosis,
    Treatment,
}

impl Category {
    pub const ALL: [Category; 4] =
        [Category::History, Category::Investigations, Category::Diagnosis, Category::Treatment];

    pub fn label(self) -> &'static str {
        match self {
            Category::History => "History",
            Category::Investigations => "Investigations",
            Category::Diagnosis => "Diagnosis",
            Category::Treatment => "Treatment",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Category::History => "history",
            Category::Investigations => "investigations",
            Category::Diagnosis => "diagnosis",
            Category::Treatment => "treatment",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Ai,
    NonAi,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Induction,
    Main,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaterKind {
    Physician,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payment {
    Insurance,
    Cash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acuity {
    Low,
    Medium,
    High,
}

impl Acuity {
    pub const ALL: [Acuity; 3] = [Acuity::Low, Acuity::Medium, Acuity::High];
}

/// Final alert colour for a category at visit close.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalCall {
    Red,
    Yellow,
    Green,
}

/// One rating of one visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub visit_id: String,
    pub rater_id: String,
    pub rater_kind: RaterKind,
    pub group: Arm,
    pub period: Period,
    /// Study week, 0 at the start of induction.
    pub week: u32,
    pub clinic: String,
    pub clinician: String,
    pub age_years: f64,
    pub gender: Sex,
    pub payment: Payment,
    pub acuity: Acuity,
    pub history_likert: u8,
    pub history_error: u8,
    pub history_final: Option<FinalCall>,
    pub history_any_red: u8,
    pub investigations_likert: u8,
    pub investigations_error: u8,
    pub investigations_final: Option<FinalCall>,
    pub investigations_any_red: u8,
    pub diagnosis_likert: u8,
    pub diagnosis_error: u8,
    pub diagnosis_final: Option<FinalCall>,
    pub diagnosis_any_red: u8,
    pub treatment_likert: u8,
    pub treatment_error: u8,
    pub treatment_final: Option<FinalCall>,
    pub treatment_any_red: u8,
    pub weight: f64,
}

/// Header of the analysis CSV, in write order.
pub const COLUMNS: [&str; 29] = [
    "visit_id",
    "rater_id",
    "rater_kind",
    "group",
    "period",
    "week",
    "clinic",
    "clinician",
    "age_years",
    "gender",
    "payment",
    "acuity",
    "history_likert",
    "history_error",
    "history_final",
    "history_any_red",
    "investigations_likert",
    "investigations_error",
    "investigations_final",
    "investigations_any_red",
    "diagnosis_likert",
    "diagnosis_error",
    "diagnosis_final",
    "diagnosis_any_red",
    "treatment_likert",
    "treatment_error",
    "treatment_final",
    "treatment_any_red",
    "weight",
];

impl RatingRow {
    pub fn likert(&self, c: Category) -> u8 {
        match c {
            Category::History => self.history_likert,
            Category::Investigations => self.investigations_likert,
            Category::Diagnosis => self.diagnosis_likert,
            Category::Treatment => self.treatment_likert,
        }
    }

    pub fn error(&self, c: Category) -> bool {
        1 == match c {
            Category::History => self.history_error,
            Category::Investigations => self.investigations_error,
            Category::Diagnosis => self.diagnosis_error,
            Category::Treatment => self.treatment_error,
        }
    }

    pub fn final_call(&self, c: Category) -> Option<FinalCall> {
        match c {
            Category::History => self.history_final,
            Category::Investigations => self.investigations_final,
            Category::Diagnosis => self.diagnosis_final,
            Category::Treatment => self.treatment_final,
        }
    }

    pub fn any_red(&self, c: Category) -> bool {
        1 == match c {
            Category::History => self.history_any_red,
            Category::Investigations => self.investigations_any_red,
            Category::Diagnosis => self.diagnosis_any_red,
            Category::Treatment => self.treatment_any_red,
        }
    }

    fn check(&self) -> Result<(), String> {
        for c in Category::ALL {
            let l = self.likert(c);
            if !(1..=5).contains(&l) {
                return Err(format!("{}_likert must be 1-5, got {l}", c.key()));
            }
            let e = match c {
                Category::History => (self.history_error, self.history_any_red),
                Category::Investigations => (self.investigations_error, self.investigations_any_red),
                Category::Diagnosis => (self.diagnosis_error, self.diagnosis_any_red),
                Category::Treatment => (self.treatment_error, self.treatment_any_red),
            };
            if e.0 > 1 || e.1 > 1 {
                return Err(format!("{0}_error and {0}_any_red must be 0 or 1", c.key()));
            }
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(format!("weight must lie in (0, 1], got {}", self.weight));
        }
        if !self.age_years.is_finite() || self.age_years < 0.0 {
            return Err(format!("age_years must be a non-negative number, got {}", self.age_years));
        }
        Ok(())
    }
}

/// Loads and validates rows. Every column in [`COLUMNS`] must be present;
/// extra columns are ignored.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<RatingRow>, AnalysisError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers: HashSet<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if let Some(missing) = COLUMNS.iter().find(|c| !headers.contains(**c)) {
        return Err(AnalysisError::MissingColumn((*missing).to_string()));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<RatingRow>() {
        let row =
            rec.map_err(|e| AnalysisError::Row { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        row.check().map_err(|message| AnalysisError::Row { line: rows.len() as u64 + 2, message })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_rows<W: Write>(rows: &[RatingRow], out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub conf: f64,
    /// Benjamini-Hochberg false discovery rate.
    pub fdr: f64,
    /// Visits per year used for the errors-averted column.
    pub annual_volume: u64,
    /// Clinic coded −1 in the sum-to-zero design; defaults to the last level.
    pub omitted_clinic: Option<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { conf: 0.95, fdr: 0.05, annual_volume: 400_000, omitted_clinic: None }
    }
}

#[cfg(test)]
pub(crate) mod fixture {
    use super::*;

    pub fn row(visit: &str, group: Arm, errors: [u8; 4]) -> RatingRow {
        let likert = |e: u8| if e == 1 { 2 } else { 4 };
        RatingRow {
            visit_id: visit.into(),
            rater_id: "p1".into(),
            rater_kind: RaterKind::Physician,
            group,
            period: Period::Main,
            week: 9,
            clinic: "A".into(),
            clinician: "A-1".into(),
            age_years: 30.0,
            gender: Sex::Female,
            payment: Payment::Cash,
            acuity: Acuity::Low,
            history_likert: likert(errors[0]),
            history_error: errors[0],
            history_final: Some(FinalCall::Green),
            history_any_red: 0,
            investigations_likert: likert(errors[1]),
            investigations_error: errors[1],
            investigations_final: Some(FinalCall::Green),
            investigations_any_red: 0,
            diagnosis_likert: likert(errors[2]),
            diagnosis_error: errors[2],
            diagnosis_final: Some(FinalCall::Green),
            diagnosis_any_red: 0,
            treatment_likert: likert(errors[3]),
            treatment_error: errors[3],
            treatment_final: Some(FinalCall::Green),
            treatment_any_red: 0,
            weight: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixture::row;
    use super::*;

    #[test]
    fn header_matches_field_order() {
        let mut buf = Vec::new();
        write_rows(&[row("v", Arm::Ai, [0, 1, 0, 1])], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
        assert_eq!(read_rows(text.as_bytes()).unwrap()[0], row("v", Arm::Ai, [0, 1, 0, 1]));
    }

    #[test]
    fn missing_column_is_named() {
        let mut buf = Vec::new();
        write_rows(&[row("v", Arm::Ai, [0; 4])], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("treatment_error", "tx_err");
        match read_rows(text.as_bytes()) {
            Err(AnalysisError::MissingColumn(c)) => assert_eq!(c, "treatment_error"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_range_likert_names_row() {
        let mut r = row("v", Arm::Ai, [0; 4]);
        r.diagnosis_likert = 7;
        let mut buf = Vec::new();
        write_rows(&[row("u", Arm::Ai, [0; 4]), r], &mut buf).unwrap();
        let err = read_rows(buf.as_slice()).unwrap_err().to_string();
        assert!(err.contains("row 3") && err.contains("diagnosis_likert"), "{err}");
    }
}
