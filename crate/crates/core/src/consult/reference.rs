//! Deterministic rule-based rater used as the offline oracle.

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::parse::Verdict;
use crate::domain::{ConsultResponse, DocumentationState, Muac, Severity, WorkflowStage};

pub const REFERENCE_MODEL_ID: &str = "reference-rules-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Every vital sign missing.
    R1,
    /// Respiratory complaint without a respiratory rate.
    R2,
    /// Pregnancy with severe-range blood pressure and a severe symptom.
    R3,
    /// MUAC missing in the 6-month to 5-year band.
    R4,
    /// MUAC in the red band.
    R5,
    /// Severe dehydration with no rehydration in the plan.
    R6,
    /// No rule matched.
    R7,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuledVerdict {
    pub rule: Rule,
    pub verdict: Verdict,
}

const RESPIRATORY: &[&str] = &["cough", "breath", "wheez", "respiratory", "pneumonia", "asthma"];
const SEVERE_PREGNANCY: &[&str] =
    &["headache", "blurred vision", "convulsion", "seizure", "chest pain", "epigastric", "swelling", "edema", "oedema"];
const REHYDRATION: &[&str] = &["oral rehydration", "ringer", "saline", "iv fluid", "rehydration"];

fn complaint_text(doc: &DocumentationState) -> String {
    doc.chief_complaints
        .iter()
        .flat_map(|c| [Some(c.label.as_str()), c.notes.as_deref()])
        .flatten()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn any_keyword(text: &str, words: &[&str]) -> bool {
    words.iter().any(|w| text.contains(w))
}

fn has_whole_word(text: &str, word: &str) -> bool {
    text.split(|c: char| !c.is_alphanumeric()).any(|t| t == word)
}

fn verdict(rule: Rule, severity: Severity, reason: &str, action: &str) -> RuledVerdict {
    RuledVerdict { rule, verdict: Verdict { severity, reason: reason.into(), action: action.into() } }
}

fn vitals_rules(doc: &DocumentationState) -> Option<RuledVerdict> {
    let v = &doc.vitals;
    let d = &doc.demographics;
    let complaints = complaint_text(doc);

    if v.all_absent() {
        return Some(verdict(
            Rule::R1,
            Severity::Red,
            "No vital signs are documented.",
            "Record temperature, pulse, blood pressure, respiratory rate and SpO2 before proceeding.",
        ));
    }
    if v.respiratory_rate_bpm.is_none() && any_keyword(&complaints, RESPIRATORY) {
        return Some(verdict(
            Rule::R2,
            Severity::Red,
            "Respiratory complaint without a documented respiratory rate.",
            "Record the respiratory rate and assess for signs of respiratory distress.",
        ));
    }
    let severe_bp = v.bp_systolic_mmhg.is_some_and(|s| s >= 160) || v.bp_diastolic_mmhg.is_some_and(|s| s >= 110);
    if d.pregnant == Some(true) && severe_bp && any_keyword(&complaints, SEVERE_PREGNANCY) {
        return Some(verdict(
            Rule::R3,
            Severity::Red,
            "Severe-range blood pressure with a severe symptom in pregnancy suggests a hypertensive emergency.",
            "Assess urgently for pre-eclampsia or eclampsia, check urine protein and prepare for referral.",
        ));
    }
    if d.muac_applicable() && v.muac.is_none() {
        return Some(verdict(
            Rule::R4,
            Severity::Yellow,
            "MUAC is not documented for a child aged 6 months to 5 years.",
            "Document MUAC to assess nutritional status.",
        ));
    }
    if v.muac == Some(Muac::Red) {
        return Some(verdict(
            Rule::R5,
            Severity::Red,
            "MUAC in the red band indicates severe acute malnutrition.",
            "Start the severe malnutrition pathway and arrange urgent nutritional care or referral.",
        ));
    }
    None
}

fn treatment_rules(doc: &DocumentationState) -> Option<RuledVerdict> {
    let dehydrated = doc.diagnoses.iter().any(|d| d.to_lowercase().contains("severe dehydration"));
    if !dehydrated {
        return None;
    }
    let rehydrated = doc.medications.iter().any(|m| {
        let name = m.name.to_lowercase();
        has_whole_word(&name, "ors") || any_keyword(&name, REHYDRATION)
    });
    (!rehydrated).then(|| {
        verdict(
            Rule::R6,
            Severity::Red,
            "Severe dehydration is diagnosed but no rehydration is prescribed.",
            "Start IV rehydration, or ORS if IV access is not feasible, and reassess hydration status.",
        )
    })
}

/// Rules R1–R5 apply at the vitals stage and R6 at treatment; first match wins.
pub fn reference_verdict(stage: WorkflowStage, doc: &DocumentationState) -> RuledVerdict {
    let hit = match stage {
        WorkflowStage::VitalsChiefComplaint => vitals_rules(doc),
        WorkflowStage::Treatment => treatment_rules(doc),
        _ => None,
    };
    hit.unwrap_or_else(|| {
        verdict(
            Rule::R7,
            Severity::Green,
            "No rule-based safety concern identified for this stage.",
            "Proceed with routine care.",
        )
    })
}

pub fn reference_rate(
    stage: WorkflowStage,
    doc: &DocumentationState,
    visit_id: &str,
    sequence_no: u64,
    timestamp: DateTime<Utc>,
) -> ConsultResponse {
    let v = reference_verdict(stage, doc).verdict;
    ConsultResponse {
        visit_id: visit_id.to_string(),
        stage,
        severity: Some(v.severity),
        error: None,
        reason: v.reason,
        action: v.action,
        shadow: false,
        model_id: REFERENCE_MODEL_ID.to_string(),
        latency_ms: 0,
        sequence_no,
        timestamp,
    }
}
