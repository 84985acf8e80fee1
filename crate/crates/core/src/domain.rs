//! Value types shared by every layer of the engine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::DomainError;

pub use safetynet_stats::TwoByTwo;

pub type VisitId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Green,
    Yellow,
    Red,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Green, Severity::Yellow, Severity::Red];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Green => "Green",
            Severity::Yellow => "Yellow",
            Severity::Red => "Red",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "green" => Ok(Severity::Green),
            "yellow" => Ok(Severity::Yellow),
            "red" => Ok(Severity::Red),
            other => Err(DomainError(format!("unknown severity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkflowStage {
    VitalsChiefComplaint,
    ClinicalNotes,
    Investigations,
    Diagnosis,
    Treatment,
}

impl WorkflowStage {
    pub const ALL: [WorkflowStage; 5] = [
        WorkflowStage::VitalsChiefComplaint,
        WorkflowStage::ClinicalNotes,
        WorkflowStage::Investigations,
        WorkflowStage::Diagnosis,
        WorkflowStage::Treatment,
    ];

    /// The two stages that make up the history category.
    pub const HISTORY_PAIR: [WorkflowStage; 2] = [WorkflowStage::VitalsChiefComplaint, WorkflowStage::ClinicalNotes];

    pub fn as_str(self) -> &'static str {
        match self {
            WorkflowStage::VitalsChiefComplaint => "vitals_chief_complaint",
            WorkflowStage::ClinicalNotes => "clinical_notes",
            WorkflowStage::Investigations => "investigations",
            WorkflowStage::Diagnosis => "diagnosis",
            WorkflowStage::Treatment => "treatment",
        }
    }

    pub fn category(self) -> Category {
        match self {
            WorkflowStage::VitalsChiefComplaint | WorkflowStage::ClinicalNotes => Category::History,
            WorkflowStage::Investigations => Category::Investigations,
            WorkflowStage::Diagnosis => Category::Diagnosis,
            WorkflowStage::Treatment => Category::Treatment,
        }
    }
}

impl fmt::Display for WorkflowStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkflowStage {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        WorkflowStage::ALL
            .into_iter()
            .find(|st| st.as_str() == norm)
            .or(match norm.as_str() {
                "vitals" => Some(WorkflowStage::VitalsChiefComplaint),
                "notes" => Some(WorkflowStage::ClinicalNotes),
                _ => None,
            })
            .ok_or_else(|| DomainError(format!("unknown workflow stage {s:?}")))
    }
}

/// Physician-rated documentation category. History spans two engine stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
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

    pub fn as_str(self) -> &'static str {
        match self {
            Category::History => "history",
            Category::Investigations => "investigations",
            Category::Diagnosis => "diagnosis",
            Category::Treatment => "treatment",
        }
    }

    pub fn stages(self) -> &'static [WorkflowStage] {
        match self {
            Category::History => &WorkflowStage::HISTORY_PAIR,
            Category::Investigations => &[WorkflowStage::Investigations],
            Category::Diagnosis => &[WorkflowStage::Diagnosis],
            Category::Treatment => &[WorkflowStage::Treatment],
        }
    }

    /// Fixed multiple-choice deficiency options for the rating form.
    pub fn failure_mode_options(self) -> &'static [&'static str] {
        match self {
            Category::History => &[
                "Chief complaint is absent",
                "Key details in the history are missing",
                "Documentation of relevant systems on physical exam is absent",
                "Pertinent vital signs are absent",
                "None of the above",
            ],
            Category::Investigations => {
                &["Key investigations are missing", "Unjustified investigations are ordered", "None of the above"]
            }
            Category::Diagnosis => &[
                "Primary diagnosis is likely incorrect",
                "Primary diagnosis is missing",
                "Primary diagnosis is too specific to be supported by current documentation",
                "Additional diagnosis is likely incorrect",
                "Clinically-relevant additional diagnosis is missing",
                "None of the above",
            ],
            Category::Treatment => &[
                "Medications are missing",
                "Medications are present but inappropriate",
                "Medications are appropriate but incorrect dosages (dose, frequency or duration)",
                "Likely inappropriate use of antibiotics overall",
                "Likely inappropriate class of antibiotics used",
                "Referrals are missing",
                "Referrals are present but inappropriate",
                "Needed procedures are missing",
                "Procedures are present but inappropriate",
                "Needed escalations of care are missing",
                "Escalations of care are present but inappropriate",
                "None of the above",
            ],
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| DomainError(format!("unknown category {s:?}")))
    }
}

/// Mid-upper arm circumference, recorded as its colour band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Muac {
    Green,
    Yellow,
    Red,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VitalSigns {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_celsius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_bpm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bp_systolic_mmhg: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bp_diastolic_mmhg: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub respiratory_rate_bpm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spo2_percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub muac: Option<Muac>,
}

impl VitalSigns {
    pub fn validate(&self) -> Result<(), DomainError> {
        if let Some(s) = self.spo2_percent {
            if !(0.0..=100.0).contains(&s) {
                return Err(DomainError(format!("spo2 {s} outside [0, 100]")));
            }
        }
        if let Some(t) = self.temperature_celsius {
            if !(25.0..=45.0).contains(&t) {
                return Err(DomainError(format!("temperature {t} outside [25, 45]")));
            }
        }
        if self.bp_systolic_mmhg.is_some() != self.bp_diastolic_mmhg.is_some() {
            return Err(DomainError("blood pressure needs both systolic and diastolic".into()));
        }
        Ok(())
    }

    pub fn all_absent(&self) -> bool {
        self.temperature_celsius.is_none()
            && self.pulse_bpm.is_none()
            && self.bp_systolic_mmhg.is_none()
            && self.respiratory_rate_bpm.is_none()
            && self.spo2_percent.is_none()
            && self.weight_kg.is_none()
            && self.height_cm.is_none()
            && self.muac.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Female => "Female",
            Gender::Male => "Male",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub age_years: u32,
    #[serde(default)]
    pub age_months: u32,
    pub gender: Gender,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pregnant: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gestation_weeks: Option<u32>,
}

impl Demographics {
    pub fn new(age_years: u32, gender: Gender) -> Self {
        Self { age_years, age_months: 0, gender, pregnant: None, gestation_weeks: None }
    }

    pub fn total_months(&self) -> u32 {
        self.age_years * 12 + self.age_months
    }

    /// MUAC applies from 6 months up to (but not including) the 6th birthday.
    pub fn muac_applicable(&self) -> bool {
        (6..=71).contains(&self.total_months())
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.age_months > 11 {
            return Err(DomainError(format!("age_months {} outside [0, 11]", self.age_months)));
        }
        if self.gestation_weeks.is_some() && self.pregnant != Some(true) {
            return Err(DomainError("gestation_weeks given without pregnancy".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiefComplaint {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<String>,
}

impl ChiefComplaint {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into(), notes: None, severity: None, duration: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Investigation {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Medication {
    pub name: String,
    #[serde(default)]
    pub dose: String,
    #[serde(default)]
    pub frequency: String,
    #[serde(default)]
    pub duration: String,
    #[serde(default)]
    pub quantity: String,
}

impl Medication {
    pub fn named(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }
}

/// The visit chart as the clinician has filled it in so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentationState {
    pub demographics: Demographics,
    #[serde(default)]
    pub vitals: VitalSigns,
    #[serde(default)]
    pub chief_complaints: Vec<ChiefComplaint>,
    #[serde(default)]
    pub clinical_notes: String,
    #[serde(default)]
    pub investigations: Vec<Investigation>,
    #[serde(default)]
    pub diagnoses: Vec<String>,
    #[serde(default)]
    pub medications: Vec<Medication>,
    #[serde(default)]
    pub referrals: Vec<String>,
}

impl DocumentationState {
    pub fn new(demographics: Demographics) -> Self {
        Self {
            demographics,
            vitals: VitalSigns::default(),
            chief_complaints: Vec::new(),
            clinical_notes: String::new(),
            investigations: Vec::new(),
            diagnoses: Vec::new(),
            medications: Vec::new(),
            referrals: Vec::new(),
        }
    }

    pub fn note_length_chars(&self) -> usize {
        self.clinical_notes.chars().count()
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        self.demographics.validate()?;
        self.vitals.validate()?;
        if self.chief_complaints.iter().any(|c| c.label.trim().is_empty()) {
            return Err(DomainError("chief complaint label is empty".into()));
        }
        Ok(())
    }

    /// True when a MUAC band is recorded for a patient outside the band's age range.
    pub fn muac_out_of_range(&self) -> bool {
        self.vitals.muac.is_some() && !self.demographics.muac_applicable()
    }
}

/// Identifies one consult response: `visit:stage:sequence_no`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResponseRef {
    pub visit_id: VisitId,
    pub stage: WorkflowStage,
    pub sequence_no: u64,
}

impl fmt::Display for ResponseRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.visit_id, self.stage, self.sequence_no)
    }
}

impl FromStr for ResponseRef {
    type Err = DomainError;

    /// Splits from the right so visit ids may themselves contain ':'.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomainError(format!("malformed response ref {s:?}"));
        let mut parts = s.rsplitn(3, ':');
        let seq = parts.next().ok_or_else(bad)?;
        let stage = parts.next().ok_or_else(bad)?;
        let visit = parts.next().ok_or_else(bad)?;
        if visit.is_empty() {
            return Err(bad());
        }
        Ok(Self { visit_id: visit.to_string(), stage: stage.parse()?, sequence_no: seq.parse().map_err(|_| bad())? })
    }
}

impl Serialize for ResponseRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ResponseRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One traffic-light verdict. `severity` is absent only for error-marked
/// entries (gateway timeout or failure), which then carry `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsultResponse {
    pub visit_id: VisitId,
    pub stage: WorkflowStage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reason: String,
    pub action: String,
    pub shadow: bool,
    pub model_id: String,
    pub latency_ms: u64,
    pub sequence_no: u64,
    pub timestamp: DateTime<Utc>,
}

impl ConsultResponse {
    pub fn reference(&self) -> ResponseRef {
        ResponseRef { visit_id: self.visit_id.clone(), stage: self.stage, sequence_no: self.sequence_no }
    }

    pub fn is_visible_red(&self) -> bool {
        self.severity == Some(Severity::Red) && !self.shadow
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.reason.trim().is_empty() || self.action.trim().is_empty() {
            return Err(DomainError("consult response needs non-empty reason and action".into()));
        }
        if self.severity.is_none() && self.error.is_none() {
            return Err(DomainError("response without severity must carry an error marker".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thumb {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub response: ResponseRef,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub response: ResponseRef,
    pub thumb: Thumb,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitAlertLog {
    pub visit_id: VisitId,
    #[serde(default)]
    pub responses: Vec<ConsultResponse>,
    #[serde(default)]
    pub acknowledgments: Vec<Acknowledgment>,
    #[serde(default)]
    pub feedback: Vec<Feedback>,
}

impl VisitAlertLog {
    pub fn new(visit_id: impl Into<VisitId>) -> Self {
        Self { visit_id: visit_id.into(), responses: Vec::new(), acknowledgments: Vec::new(), feedback: Vec::new() }
    }

    pub fn find(&self, r: &ResponseRef) -> Option<&ConsultResponse> {
        self.responses.iter().find(|x| x.stage == r.stage && x.sequence_no == r.sequence_no)
    }

    pub fn is_acknowledged(&self, r: &ResponseRef) -> bool {
        self.acknowledgments.iter().any(|a| &a.response == r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Ai,
    NonAi,
    Mixed,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Ai => "ai",
            Group::NonAi => "non_ai",
            Group::Mixed => "mixed",
        }
    }
}

impl FromStr for Group {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ai" => Ok(Group::Ai),
            "non_ai" | "nonai" => Ok(Group::NonAi),
            "mixed" => Ok(Group::Mixed),
            _ => Err(DomainError(format!("unknown group {s:?}"))),
        }
    }
}

/// Study arm of a single clinician.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Ai,
    NonAi,
}

/// AI when every attending clinician is in the AI arm, NonAI when none is,
/// Mixed otherwise.
pub fn assign_visit_group(arms: &[Arm]) -> Result<Group, DomainError> {
    if arms.is_empty() {
        return Err(DomainError("visit has no clinicians".into()));
    }
    Ok(if arms.iter().all(|&a| a == Arm::Ai) {
        Group::Ai
    } else if arms.iter().all(|&a| a == Arm::NonAi) {
        Group::NonAi
    } else {
        Group::Mixed
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Induction,
    Main,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceRegion {
    Eastlands,
    Southwest,
    ThikaRoad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payment {
    Insurance,
    Cash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub visit_id: VisitId,
    pub clinic_id: String,
    pub clinician_ids: Vec<String>,
    pub group: Group,
    pub period: Period,
    pub service_region: ServiceRegion,
    pub payment: Payment,
    pub attending_minutes: f64,
    pub started_at: DateTime<Utc>,
    pub documentation: DocumentationState,
    pub alert_log: VisitAlertLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaterKind {
    Physician,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acuity {
    Low,
    Medium,
    High,
}

/// Likert scores at or below this value count as a clinically meaningful error.
pub const LIKERT_ERROR_MAX: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingForm {
    pub visit_id: VisitId,
    pub rater_id: String,
    pub rater_kind: RaterKind,
    pub likert: BTreeMap<Category, u8>,
    #[serde(default)]
    pub failure_modes: BTreeMap<Category, BTreeSet<String>>,
    pub acuity: Acuity,
}

impl RatingForm {
    pub fn error(&self, c: Category) -> Option<bool> {
        self.likert.get(&c).map(|&v| v <= LIKERT_ERROR_MAX)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        for c in Category::ALL {
            match self.likert.get(&c) {
                Some(v) if (1..=5).contains(v) => {}
                Some(v) => return Err(DomainError(format!("{c} likert {v} outside 1..=5"))),
                None => return Err(DomainError(format!("{c} likert missing"))),
            }
        }
        for (c, modes) in &self.failure_modes {
            let options = c.failure_mode_options();
            if let Some(m) = modes.iter().find(|m| !options.contains(&m.as_str())) {
                return Err(DomainError(format!("{m:?} is not a {c} failure mode")));
            }
        }
        Ok(())
    }
}

/// Post-visit phone follow-up. `feeling_likert`: 1 much worse, 2 a little worse,
/// 3 the same, 4 a little better, 5 much better.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub visit_id: VisitId,
    pub responded_8day: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feeling_likert: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saw_pharmacist: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_referred: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unplanned_penda_visit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_day_worse: Option<bool>,
}

impl OutcomeRecord {
    pub fn not_feeling_better(&self) -> Option<bool> {
        self.feeling_likert.map(|v| v <= 3)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        match self.feeling_likert {
            Some(_) if !self.responded_8day => Err(DomainError("feeling score without an 8-day response".into())),
            Some(v) if !(1..=5).contains(&v) => Err(DomainError(format!("feeling score {v} outside 1..=5"))),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn severity_order() {
        assert!(Severity::Green < Severity::Yellow && Severity::Yellow < Severity::Red);
        assert_eq!("RED".parse::<Severity>().unwrap(), Severity::Red);
        assert!("amber".parse::<Severity>().is_err());
    }

    #[test]
    fn response_ref_round_trip_with_colon_in_visit() {
        let r = ResponseRef { visit_id: "clinic:7".into(), stage: WorkflowStage::Diagnosis, sequence_no: 3 };
        let s = r.to_string();
        assert_eq!(s, "clinic:7:diagnosis:3");
        assert_eq!(s.parse::<ResponseRef>().unwrap(), r);
        assert!("diagnosis:3".parse::<ResponseRef>().is_err());
    }

    #[test]
    fn visit_group_rules() {
        assert_eq!(assign_visit_group(&[Arm::Ai, Arm::Ai]).unwrap(), Group::Ai);
        assert_eq!(assign_visit_group(&[Arm::Ai, Arm::NonAi]).unwrap(), Group::Mixed);
        assert_eq!(assign_visit_group(&[Arm::NonAi]).unwrap(), Group::NonAi);
        assert!(assign_visit_group(&[]).is_err());
    }

    #[test]
    fn vitals_validation() {
        let mut v = VitalSigns { spo2_percent: Some(101.0), ..Default::default() };
        assert!(v.validate().is_err());
        v.spo2_percent = Some(97.0);
        v.bp_systolic_mmhg = Some(120);
        assert!(v.validate().is_err());
        v.bp_diastolic_mmhg = Some(80);
        assert!(v.validate().is_ok());
    }

    #[test]
    fn gestation_requires_pregnancy() {
        let mut d = Demographics::new(29, Gender::Female);
        d.gestation_weeks = Some(34);
        assert!(d.validate().is_err());
        d.pregnant = Some(true);
        assert!(d.validate().is_ok());
    }

    #[test]
    fn muac_age_band() {
        let mut d = Demographics::new(0, Gender::Male);
        d.age_months = 5;
        assert!(!d.muac_applicable());
        d.age_months = 6;
        assert!(d.muac_applicable());
        let d = Demographics::new(5, Gender::Male);
        assert!(d.muac_applicable());
        let d = Demographics::new(6, Gender::Male);
        assert!(!d.muac_applicable());
    }

    #[test]
    fn rating_form_validation() {
        let mut form = RatingForm {
            visit_id: "v".into(),
            rater_id: "r".into(),
            rater_kind: RaterKind::Physician,
            likert: Category::ALL.iter().map(|&c| (c, 4)).collect(),
            failure_modes: BTreeMap::new(),
            acuity: Acuity::Low,
        };
        assert!(form.validate().is_ok());
        assert_eq!(form.error(Category::History), Some(false));
        form.likert.insert(Category::History, 2);
        assert_eq!(form.error(Category::History), Some(true));
        form.failure_modes.insert(Category::Diagnosis, ["Medications are missing".to_string()].into());
        assert!(form.validate().is_err());
    }

    #[test]
    fn canonical_json_omits_absent_fields() {
        let doc = DocumentationState::new(Demographics::new(30, Gender::Male));
        let json = serde_json::to_string(&doc).unwrap();
        assert!(!json.contains("pregnant"));
        assert!(!json.contains("temperature_celsius"));
        let back: DocumentationState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
    }
}
