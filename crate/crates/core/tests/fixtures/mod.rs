//! Shared test fixtures: a scripted journal with hand-computed flags, the
//! few-shot example extractor, pinned template digests, and the four vitals
//! examples with their expected reference-rater verdicts.
#![allow(dead_code)]

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use safetynet_core::consult::Rule;
use safetynet_core::{
    BlurCause, BlurField, ChiefComplaint, ConsultResponse, Demographics, DocumentationState, EngineEvent,
    FieldBlurEvent, Gender, Group, Medication, ResponseRef, Severity, Thumb, VisitMeta, VitalSigns, WorkflowStage,
};

pub fn t(min: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 4, 8, 0, 0).unwrap() + Duration::minutes(min)
}

pub fn base_doc() -> DocumentationState {
    let mut d = DocumentationState::new(Demographics::new(30, Gender::Male));
    d.vitals.temperature_celsius = Some(37.0);
    d.vitals.pulse_bpm = Some(80.0);
    d.chief_complaints.push(ChiefComplaint::new("Cough"));
    d
}

pub fn created(id: &str, shadow: bool, min: i64) -> EngineEvent {
    EngineEvent::VisitCreated {
        visit_id: id.into(),
        meta: VisitMeta {
            shadow,
            clinic_id: Some("c1".into()),
            clinician_ids: vec!["k1".into()],
            group: Some(if shadow { Group::NonAi } else { Group::Ai }),
            started_at: t(min),
        },
    }
}

pub fn blur(id: &str, field: BlurField, doc: &DocumentationState, cause: BlurCause, min: i64) -> EngineEvent {
    EngineEvent::FieldBlur(FieldBlurEvent {
        visit_id: id.into(),
        field,
        snapshot: doc.clone(),
        cause,
        timestamp: t(min),
    })
}

pub fn done(id: &str, stage: WorkflowStage, seq: u64, sev: Severity, min: i64) -> EngineEvent {
    EngineEvent::ConsultCompleted {
        response: ConsultResponse {
            visit_id: id.into(),
            stage,
            severity: Some(sev),
            error: None,
            reason: format!("{sev} for {stage}"),
            action: "act".into(),
            shadow: false,
            model_id: "scripted".into(),
            latency_ms: 900,
            sequence_no: seq,
            timestamp: t(min),
        },
    }
}

pub fn rref(id: &str, stage: WorkflowStage, seq: u64) -> ResponseRef {
    ResponseRef { visit_id: id.into(), stage, sequence_no: seq }
}

use BlurCause::*;
use Severity::*;
use WorkflowStage::*;

/// (events that fire consults, completions, acknowledgments/feedback).
pub fn script() -> (Vec<EngineEvent>, Vec<EngineEvent>, Vec<EngineEvent>) {
    let mut prefix = Vec::new();
    let mut completions = Vec::new();
    let mut suffix = Vec::new();

    // Visit a: red vitals fixed by a second edit; acknowledged.
    let mut a = base_doc();
    prefix.push(created("a", false, 0));
    prefix.push(blur("a", BlurField::ChiefComplaint, &a, UserNavigation, 1));
    a.vitals.respiratory_rate_bpm = Some(18.0);
    prefix.push(blur("a", BlurField::ChiefComplaint, &a, UserNavigation, 2));
    a.diagnoses.push("Bronchitis".into());
    prefix.push(blur("a", BlurField::Diagnosis, &a, UserNavigation, 3));
    a.medications.push(Medication::named("Amoxicillin"));
    prefix.push(blur("a", BlurField::Medications, &a, UserNavigation, 4));
    completions.push(done("a", VitalsChiefComplaint, 1, Red, 5));
    completions.push(done("a", VitalsChiefComplaint, 2, Green, 5));
    completions.push(done("a", Diagnosis, 1, Yellow, 5));
    completions.push(done("a", Treatment, 1, Green, 5));
    suffix.push(EngineEvent::Acknowledged { response: rref("a", VitalsChiefComplaint, 1), timestamp: t(6) });
    suffix.push(EngineEvent::Feedback { response: rref("a", Diagnosis, 1), thumb: Thumb::Down, timestamp: t(6) });

    // Visit b: shadowed; treatment ends red after starting green.
    let mut b = base_doc();
    prefix.push(created("b", true, 0));
    prefix.push(blur("b", BlurField::ChiefComplaint, &b, UserNavigation, 1));
    b.clinical_notes = "Dry cough for three days.".into();
    prefix.push(blur("b", BlurField::ClinicalNotes, &b, UserNavigation, 2));
    prefix.push(blur("b", BlurField::ClinicalNotes, &b, UserNavigation, 3));
    b.medications.push(Medication::named("Cough syrup"));
    prefix.push(blur("b", BlurField::Medications, &b, UserNavigation, 4));
    b.medications.push(Medication::named("Ciprofloxacin"));
    prefix.push(blur("b", BlurField::Medications, &b, UserNavigation, 5));
    completions.push(done("b", VitalsChiefComplaint, 1, Green, 6));
    completions.push(done("b", ClinicalNotes, 1, Yellow, 6));
    completions.push(done("b", Treatment, 1, Green, 6));
    completions.push(done("b", Treatment, 2, Red, 6));

    // Visit c: two reds, both acknowledged; the acknowledgment blur is suppressed.
    let mut c = base_doc();
    prefix.push(created("c", false, 0));
    prefix.push(blur("c", BlurField::ChiefComplaint, &c, UserNavigation, 1));
    c.diagnoses.push("Malaria".into());
    prefix.push(blur("c", BlurField::Diagnosis, &c, UserNavigation, 2));
    c.diagnoses.push("Anaemia".into());
    prefix.push(blur("c", BlurField::Diagnosis, &c, AlertAcknowledgment, 3));
    completions.push(done("c", VitalsChiefComplaint, 1, Red, 4));
    completions.push(done("c", Diagnosis, 1, Red, 4));
    suffix.push(EngineEvent::Acknowledged { response: rref("c", VitalsChiefComplaint, 1), timestamp: t(5) });
    suffix.push(EngineEvent::Acknowledged { response: rref("c", Diagnosis, 1), timestamp: t(5) });
    suffix.push(EngineEvent::Feedback { response: rref("c", Diagnosis, 1), thumb: Thumb::Up, timestamp: t(5) });

    (prefix, completions, suffix)
}

pub fn shuffled_journal(seed: u64) -> Vec<EngineEvent> {
    let (prefix, mut completions, suffix) = script();
    completions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    prefix.into_iter().chain(completions).chain(suffix).collect()
}

/// (visit, left_in_red, started_red, left_in_red over history, blocked)
/// after replaying [`shuffled_journal`], worked out by hand.
pub const EXPECTED_FLAGS: [(&str, bool, bool, bool, bool); 3] =
    [("a", false, true, false, false), ("b", true, false, false, false), ("c", true, true, true, false)];

/// (expected severity from the example header, JSON text) for every few-shot example.
pub fn few_shot(text: &str) -> Vec<(Severity, String)> {
    let mut out = Vec::new();
    let headers: Vec<(usize, Severity)> = ["Green", "Yellow", "Red"]
        .iter()
        .flat_map(|c| {
            let sev: Severity = c.parse().unwrap();
            let header = format!("{c} Example");
            text.match_indices(&header).map(|(i, _)| (i, sev)).collect::<Vec<_>>()
        })
        .collect();
    for (start, sev) in headers {
        let rest = &text[start..];
        let open = rest
            .match_indices('{')
            .map(|(i, _)| i)
            .find(|&i| rest[i + 1..].trim_start().starts_with("\"Response\""))
            .expect("example has a JSON block");
        let mut depth = 0;
        let mut in_str = false;
        let mut end = open;
        for (i, ch) in rest[open..].char_indices() {
            match ch {
                '"' => in_str = !in_str,
                '{' if !in_str => depth += 1,
                '}' if !in_str => {
                    depth -= 1;
                    if depth == 0 {
                        end = open + i + 1;
                        break;
                    }
                }
                _ => {}
            }
        }
        out.push((sev, rest[open..end].to_string()));
    }
    out
}

/// SHA-256 of each shipped template.
pub const TEMPLATE_PINS: [(WorkflowStage, &str); 5] = [
    (WorkflowStage::VitalsChiefComplaint, "c33e27dd1fb404dc255a51b61a31ab080e580696f3d6ffcbe30ce2cdf5655d12"),
    (WorkflowStage::ClinicalNotes, "0790b80a9e2b4036809808940e3fa3cc928e4354d820dafcc74cba81cbed5d42"),
    (WorkflowStage::Investigations, "5e5659699e6b80afc4fc858f6777dca5f343fa2398079009bbf1f03e92bb1cdb"),
    (WorkflowStage::Diagnosis, "f80975f8bffea1ab14245556c61a5ae030b5060093aa4eaced8ac36027503670"),
    (WorkflowStage::Treatment, "2099c21730c6d6f7520db1a0efc7f3266c1d556009c150c6c0de44be02795fcd"),
];

pub fn ts() -> DateTime<Utc> {
    DateTime::UNIX_EPOCH
}

pub fn sore_throat() -> DocumentationState {
    let mut d = DocumentationState::new(Demographics::new(24, Gender::Female));
    d.vitals = VitalSigns {
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
    d.chief_complaints.push(ChiefComplaint::new("Sore Throat"));
    d
}

pub fn abdominal_pain_child() -> DocumentationState {
    let mut d = DocumentationState::new(Demographics::new(4, Gender::Female));
    d.vitals = VitalSigns {
        temperature_celsius: Some(37.2),
        pulse_bpm: Some(88.0),
        respiratory_rate_bpm: Some(18.0),
        spo2_percent: Some(98.0),
        weight_kg: Some(16.5),
        height_cm: Some(102.0),
        ..Default::default()
    };
    d.chief_complaints.push(ChiefComplaint::new("Abdominal Pain"));
    d
}

pub fn cough_no_rr() -> DocumentationState {
    let mut d = DocumentationState::new(Demographics::new(4, Gender::Male));
    d.vitals = VitalSigns {
        temperature_celsius: Some(38.0),
        pulse_bpm: Some(95.0),
        spo2_percent: Some(99.0),
        weight_kg: Some(18.0),
        height_cm: Some(100.0),
        ..Default::default()
    };
    d.chief_complaints.push(ChiefComplaint::new("Cough and Difficult Breathing"));
    d
}

pub fn pregnant_hypertension() -> DocumentationState {
    let mut demo = Demographics::new(29, Gender::Female);
    demo.pregnant = Some(true);
    demo.gestation_weeks = Some(34);
    let mut d = DocumentationState::new(demo);
    d.vitals = VitalSigns {
        temperature_celsius: Some(37.8),
        pulse_bpm: Some(105.0),
        bp_systolic_mmhg: Some(170),
        bp_diastolic_mmhg: Some(110),
        weight_kg: Some(70.0),
        height_cm: Some(160.0),
        ..Default::default()
    };
    d.chief_complaints.push(ChiefComplaint::new("Headache and Blurred Vision"));
    d
}

/// The vitals-stage examples with the rule the reference rater must fire.
pub fn vitals_examples() -> Vec<(DocumentationState, Severity, Rule)> {
    vec![
        (sore_throat(), Severity::Green, Rule::R7),
        (abdominal_pain_child(), Severity::Yellow, Rule::R4),
        (cough_no_rr(), Severity::Red, Rule::R2),
        (pregnant_hypertension(), Severity::Red, Rule::R3),
    ]
}
