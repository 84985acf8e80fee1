//! System and user prompt assembly for each workflow stage.
//!
//! System prompts are fixed resource files. The user prompt is the bare
//! component block for the stage; each later stage adds sections on top of the
//! previous stage's context.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{DocumentationState, Muac, WorkflowStage};

pub const TEMPLATE_VERSION: &str = "v1";

const VITALS_CHIEF_COMPLAINT: &str = include_str!("../resources/prompts/v1/vitals_chief_complaint.txt");
const CLINICAL_NOTES: &str = include_str!("../resources/prompts/v1/clinical_notes.txt");
const INVESTIGATIONS: &str = include_str!("../resources/prompts/v1/investigations.txt");
const DIAGNOSIS: &str = include_str!("../resources/prompts/v1/diagnosis.txt");
const TREATMENT: &str = include_str!("../resources/prompts/v1/treatment.txt");

pub const NOT_RECORDED: &str = "Not recorded";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub stage: WorkflowStage,
    pub system_text: String,
    pub user_text: String,
}

pub fn template(stage: WorkflowStage) -> &'static str {
    match stage {
        WorkflowStage::VitalsChiefComplaint => VITALS_CHIEF_COMPLAINT,
        WorkflowStage::ClinicalNotes => CLINICAL_NOTES,
        WorkflowStage::Investigations => INVESTIGATIONS,
        WorkflowStage::Diagnosis => DIAGNOSIS,
        WorkflowStage::Treatment => TREATMENT,
    }
}

/// A block of the user prompt, in render order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Section {
    Patient,
    Vitals,
    ChiefComplaints,
    ClinicalNotes,
    Investigations,
    Diagnosis,
    Medications,
    Referrals,
}

impl Section {
    /// Leading label of the section's first line.
    pub fn label(self) -> &'static str {
        match self {
            Section::Patient => "Age:",
            Section::Vitals => "Vitals:",
            Section::ChiefComplaints => "Chief complaints:",
            Section::ClinicalNotes => "Clinical Notes:",
            Section::Investigations => "Investigations Ordered:",
            Section::Diagnosis => "Diagnosis:",
            Section::Medications => "Treatment Plan:",
            Section::Referrals => "Referrals:",
        }
    }
}

pub fn sections(stage: WorkflowStage) -> &'static [Section] {
    use Section::*;
    const ALL: [Section; 8] =
        [Patient, Vitals, ChiefComplaints, ClinicalNotes, Investigations, Diagnosis, Medications, Referrals];
    match stage {
        WorkflowStage::VitalsChiefComplaint => &ALL[..3],
        WorkflowStage::ClinicalNotes => &ALL[..4],
        WorkflowStage::Investigations => &ALL[..5],
        WorkflowStage::Diagnosis => &ALL[..6],
        WorkflowStage::Treatment => &ALL,
    }
}

pub fn build(stage: WorkflowStage, doc: &DocumentationState) -> PromptPair {
    PromptPair { stage, system_text: template(stage).to_string(), user_text: render_user(stage, doc) }
}

pub fn render_user(stage: WorkflowStage, doc: &DocumentationState) -> String {
    sections(stage).iter().map(|&s| render_section(s, doc)).collect::<Vec<_>>().join("\n\n")
}

/// SHA-256 of the stage's user prompt: it covers exactly the fields the stage consumes.
pub fn content_hash(stage: WorkflowStage, doc: &DocumentationState) -> String {
    let digest = Sha256::digest(render_user(stage, doc).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn number(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

fn or_missing<T>(v: Option<T>, f: impl FnOnce(T) -> String) -> String {
    v.map(f).unwrap_or_else(|| NOT_RECORDED.to_string())
}

fn non_empty(s: &str) -> Option<&str> {
    let t = s.trim();
    (!t.is_empty()).then_some(t)
}

fn render_section(section: Section, doc: &DocumentationState) -> String {
    match section {
        Section::Patient => {
            let d = &doc.demographics;
            let age = if d.age_months > 0 {
                format!("{}y {}m", d.age_years, d.age_months)
            } else {
                format!("{}y", d.age_years)
            };
            let mut line = format!("Age: {age} Gender: {}", d.gender);
            match (d.pregnant, d.gestation_weeks) {
                (Some(true), Some(w)) => line.push_str(&format!(" Pregnant: {w} weeks gestation")),
                (Some(true), None) => line.push_str(" Pregnant: Yes"),
                (Some(false), _) => line.push_str(" Pregnant: No"),
                (None, _) => {}
            }
            line
        }
        Section::Vitals => {
            let v = &doc.vitals;
            let bp = match (v.bp_systolic_mmhg, v.bp_diastolic_mmhg) {
                (Some(s), Some(d)) => format!("{s}/{d}"),
                _ => NOT_RECORDED.to_string(),
            };
            let muac = or_missing(v.muac, |m| {
                match m {
                    Muac::Green => "Green",
                    Muac::Yellow => "Yellow",
                    Muac::Red => "Red",
                }
                .to_string()
            });
            format!(
                "Vitals: Temperature: {} Pulse: {} Blood Pressure: {bp} Respiratory Rate: {} SPO2: {} Weight: {} Height: {} MUAC: {muac}",
                or_missing(v.temperature_celsius, |t| format!("{t:.2} Celsius")),
                or_missing(v.pulse_bpm, |p| format!("{} bpm", number(p))),
                or_missing(v.respiratory_rate_bpm, |r| format!("{} bpm", number(r))),
                or_missing(v.spo2_percent, number),
                or_missing(v.weight_kg, |w| format!("{w:.1} kgs")),
                or_missing(v.height_cm, |h| format!("{h:.1} cms")),
            )
        }
        Section::ChiefComplaints => {
            if doc.chief_complaints.is_empty() {
                return format!("Chief complaints: {NOT_RECORDED}");
            }
            let labels: Vec<&str> = doc.chief_complaints.iter().map(|c| c.label.trim()).collect();
            let mut out = format!("Chief complaints: {}", labels.join("; "));
            for c in &doc.chief_complaints {
                let mut parts = Vec::new();
                if let Some(n) = c.notes.as_deref().and_then(non_empty) {
                    parts.push(format!("Notes: {n}"));
                }
                if let Some(s) = c.severity.as_deref().and_then(non_empty) {
                    parts.push(format!("Severity: {s}"));
                }
                if let Some(d) = c.duration.as_deref().and_then(non_empty) {
                    parts.push(format!("Duration: {d}"));
                }
                if !parts.is_empty() {
                    out.push_str(&format!("\n{}: {}", c.label.trim(), parts.join(" ")));
                }
            }
            out
        }
        Section::ClinicalNotes => {
            format!("Clinical Notes: {}", non_empty(&doc.clinical_notes).unwrap_or(NOT_RECORDED))
        }
        Section::Investigations => {
            if doc.investigations.is_empty() {
                return format!("Investigations Ordered: {NOT_RECORDED}");
            }
            let items: Vec<String> = doc
                .investigations
                .iter()
                .map(|i| match i.result.as_deref().and_then(non_empty) {
                    Some(r) => format!("{}: {r}", i.name.trim()),
                    None => i.name.trim().to_string(),
                })
                .collect();
            format!("Investigations Ordered: {}", items.join("; "))
        }
        Section::Diagnosis => {
            if doc.diagnoses.is_empty() {
                return format!("Diagnosis: {NOT_RECORDED}");
            }
            let items: Vec<&str> = doc.diagnoses.iter().map(|d| d.trim()).collect();
            format!("Diagnosis: {}", items.join("; "))
        }
        Section::Medications => {
            if doc.medications.is_empty() {
                return format!("Treatment Plan: {NOT_RECORDED}");
            }
            let mut out = String::from("Treatment Plan:");
            for m in &doc.medications {
                let details: Vec<&str> = [&m.dose, &m.frequency, &m.duration, &m.quantity]
                    .into_iter()
                    .filter_map(|s| non_empty(s))
                    .collect();
                out.push_str("\n- ");
                out.push_str(m.name.trim());
                if !details.is_empty() {
                    out.push(' ');
                    out.push_str(&details.join(", "));
                }
            }
            out
        }
        Section::Referrals => {
            if doc.referrals.is_empty() {
                return format!("Referrals: {NOT_RECORDED}");
            }
            let items: Vec<&str> = doc.referrals.iter().map(|r| r.trim()).collect();
            format!("Referrals: {}", items.join("; "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ChiefComplaint, Demographics, Gender, Investigation, VitalSigns};

    fn sore_throat() -> DocumentationState {
        let mut doc = DocumentationState::new(Demographics::new(24, Gender::Female));
        doc.vitals = VitalSigns {
            temperature_celsius: Some(37.3),
            pulse_bpm: Some(78.0),
            bp_systolic_mmhg: Some(118),
            bp_diastolic_mmhg: Some(76),
            respiratory_rate_bpm: Some(16.0),
            spo2_percent: Some(98.0),
            weight_kg: Some(60.0),
            height_cm: Some(165.0),
            muac: None,
        };
        doc.chief_complaints.push(ChiefComplaint::new("Sore Throat"));
        doc
    }

    #[test]
    fn vitals_layout_follows_green_example() {
        let text = render_user(WorkflowStage::VitalsChiefComplaint, &sore_throat());
        assert_eq!(
            text,
            "Age: 24y Gender: Female\n\n\
             Vitals: Temperature: 37.30 Celsius Pulse: 78 bpm Blood Pressure: 118/76 Respiratory Rate: 16 bpm SPO2: 98 Weight: 60.0 kgs Height: 165.0 cms MUAC: Not recorded\n\n\
             Chief complaints: Sore Throat"
        );
    }

    #[test]
    fn pregnancy_follows_gender() {
        let mut doc = sore_throat();
        doc.demographics.pregnant = Some(true);
        doc.demographics.gestation_weeks = Some(34);
        let text = render_user(WorkflowStage::VitalsChiefComplaint, &doc);
        assert!(text.starts_with("Age: 24y Gender: Female Pregnant: 34 weeks gestation\n"));
    }

    #[test]
    fn pending_results_are_omitted() {
        let mut doc = sore_throat();
        doc.investigations.push(Investigation { name: "Full haemogram".into(), result: None });
        doc.investigations.push(Investigation { name: "Urinalysis".into(), result: Some("nitrites".into()) });
        let text = render_user(WorkflowStage::Diagnosis, &doc);
        assert!(text.contains("Investigations Ordered: Full haemogram; Urinalysis: nitrites"));
        assert!(text.contains("Diagnosis: Not recorded"));
    }

    #[test]
    fn stages_are_cumulative() {
        let doc = sore_throat();
        for pair in WorkflowStage::ALL.windows(2) {
            let earlier = render_user(pair[0], &doc);
            let later = render_user(pair[1], &doc);
            assert!(later.starts_with(&earlier));
            assert!(later.len() > earlier.len());
        }
    }

    #[test]
    fn hash_ignores_fields_outside_stage() {
        let doc = sore_throat();
        let mut edited = doc.clone();
        edited.diagnoses.push("Pharyngitis".into());
        assert_eq!(
            content_hash(WorkflowStage::ClinicalNotes, &doc),
            content_hash(WorkflowStage::ClinicalNotes, &edited)
        );
        assert_ne!(content_hash(WorkflowStage::Diagnosis, &doc), content_hash(WorkflowStage::Diagnosis, &edited));
    }

    #[test]
    fn months_render_when_present() {
        let mut doc = sore_throat();
        doc.demographics.age_years = 2;
        doc.demographics.age_months = 6;
        assert!(render_user(WorkflowStage::VitalsChiefComplaint, &doc).starts_with("Age: 2y 6m "));
    }
}
