//! Expands compact visits into engine records, rating forms and journals.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safetynet_core::{
    Acknowledgment, BlurCause, BlurField, Category, ChiefComplaint, ConsultResponse, Demographics, DocumentationState,
    EngineEvent, Feedback, FieldBlurEvent, Gender, Investigation, Medication, Muac, RatingForm, Severity,
    VisitAlertLog, VisitMeta, VisitRecord, VitalSigns, WorkflowStage, LIKERT_ERROR_MAX,
};

use crate::generate::{Cohort, SimVisit};

pub const MODEL_ID: &str = "sim-consult";

const COMPLAINTS: [(&str, &str, &str, &str); 8] = [
    ("Cough", "Chest X-ray", "Acute bronchitis", "Amoxicillin 500mg"),
    ("Fever", "Malaria rapid diagnostic test", "Viral fever", "Paracetamol 500mg"),
    ("Abdominal Pain", "Urinalysis", "Gastritis", "Omeprazole 20mg"),
    ("Headache", "Blood pressure recheck", "Tension headache", "Ibuprofen 400mg"),
    ("Sore Throat", "Throat swab", "Acute pharyngitis", "Phenoxymethylpenicillin 250mg"),
    ("Diarrhoea", "Stool microscopy", "Acute gastroenteritis", "ORS sachets"),
    ("Painful Urination", "Urinalysis", "Uncomplicated urinary tract infection", "Nitrofurantoin 100mg"),
    ("Skin Rash", "Full haemogram", "Contact dermatitis", "Hydrocortisone cream 1%"),
];

const NOTE_FILLER: &str = "Patient reports symptoms as documented. Examination findings recorded. \
No danger signs noted. Advised on hydration and review if worse. ";

fn field_of(stage: WorkflowStage) -> BlurField {
    match stage {
        WorkflowStage::VitalsChiefComplaint => BlurField::ChiefComplaint,
        WorkflowStage::ClinicalNotes => BlurField::ClinicalNotes,
        WorkflowStage::Investigations => BlurField::Investigations,
        WorkflowStage::Diagnosis => BlurField::Diagnosis,
        WorkflowStage::Treatment => BlurField::Medications,
    }
}

fn reason_action(stage: WorkflowStage, sev: Option<Severity>) -> (String, String) {
    match sev {
        None => ("Consult unavailable".into(), "Continue with usual care".into()),
        Some(Severity::Green) => (format!("{stage} documentation is consistent"), "Proceed".into()),
        Some(Severity::Yellow) => {
            (format!("{stage} documentation is incomplete"), "Consider adding the missing details".into())
        }
        Some(Severity::Red) => {
            (format!("{stage} documentation has a safety concern"), "Review and revise before proceeding".into())
        }
    }
}

/// One consult call in blur order.
struct Step {
    stage: WorkflowStage,
    sequence_no: u64,
    severity: Option<Severity>,
    blur_at: DateTime<Utc>,
}

impl SimVisit {
    fn steps(&self) -> Vec<Step> {
        let mut out = Vec::new();
        for stage in WorkflowStage::ALL {
            for (j, &severity) in self.stage_calls(stage).iter().enumerate() {
                let k = out.len() as i64;
                out.push(Step {
                    stage,
                    sequence_no: j as u64 + 1,
                    severity,
                    blur_at: self.started_at + Duration::seconds(90 * k),
                });
            }
        }
        out
    }

    fn response(&self, st: &Step) -> ConsultResponse {
        let (reason, action) = reason_action(st.stage, st.severity);
        ConsultResponse {
            visit_id: self.visit_id.clone(),
            stage: st.stage,
            severity: st.severity,
            error: st.severity.is_none().then(|| "Timeout".to_string()),
            reason,
            action,
            shadow: self.shadow(),
            model_id: MODEL_ID.into(),
            latency_ms: if st.severity.is_some() { 2400 } else { 30_000 },
            sequence_no: st.sequence_no,
            timestamp: st.blur_at + Duration::seconds(3),
        }
    }

    fn ack_at(st: &Step) -> DateTime<Utc> {
        st.blur_at + Duration::seconds(10)
    }

    fn feedback_at(st: &Step) -> DateTime<Utc> {
        st.blur_at + Duration::seconds(20)
    }

    /// Chart as of blur number `revision`; the revision marker keeps every
    /// stage's rendered prompt distinct between blurs.
    pub fn documentation(&self, revision: usize) -> DocumentationState {
        let mut rng = ChaCha8Rng::seed_from_u64(self.doc_seed);
        let mut demo = Demographics::new(self.age_years, self.gender);
        demo.age_months = self.age_months;
        if self.pregnant {
            demo.pregnant = Some(true);
            demo.gestation_weeks = Some(rng.random_range(8..39));
        }
        let child = self.age_years < 12;
        let muac = demo.muac_applicable().then_some(Muac::Green);
        let weight = if child { 3.5 + 2.5 * self.age_years as f64 } else { rng.random_range(48.0..95.0f64).round() };
        let height = if child { 55.0 + 7.0 * self.age_years as f64 } else { rng.random_range(150.0..188.0f64).round() };
        let adult_bp = self.age_years >= 12;
        let vitals = VitalSigns {
            temperature_celsius: Some((rng.random_range(36.2..38.9f64) * 10.0).round() / 10.0),
            pulse_bpm: Some(rng.random_range(62..112) as f64),
            bp_systolic_mmhg: adult_bp.then(|| rng.random_range(104..146)),
            bp_diastolic_mmhg: adult_bp.then(|| rng.random_range(64..94)),
            respiratory_rate_bpm: Some(rng.random_range(14..28) as f64),
            spo2_percent: Some(rng.random_range(95..100) as f64),
            weight_kg: Some(weight),
            height_cm: Some(height),
            muac,
        };
        let (complaint, test, dx, med) = COMPLAINTS[rng.random_range(0..COMPLAINTS.len())];
        let mut cc = ChiefComplaint::new(complaint);
        cc.notes = Some(format!("revision {revision}"));
        cc.duration = Some(format!("{} days", rng.random_range(1..8)));

        let notes: String = NOTE_FILLER.chars().cycle().take(self.note_length).collect();
        let mut doc = DocumentationState::new(demo);
        doc.vitals = vitals;
        doc.chief_complaints.push(cc);
        doc.clinical_notes = notes;
        doc.investigations.push(Investigation { name: test.into(), result: Some("Pending".into()) });
        doc.diagnoses.push(dx.into());
        doc.medications.push(Medication {
            name: med.into(),
            dose: "1 tablet".into(),
            frequency: "TDS".into(),
            duration: "5 days".into(),
            quantity: "15".into(),
        });
        doc
    }

    pub fn alert_log(&self) -> VisitAlertLog {
        let mut log = VisitAlertLog::new(self.visit_id.clone());
        let steps = self.steps();
        let mut responses: Vec<ConsultResponse> = steps.iter().map(|s| self.response(s)).collect();
        responses.sort_by_key(|r| (r.stage, r.sequence_no));
        for st in &steps {
            let r = self.response(st);
            if r.is_visible_red() {
                log.acknowledgments.push(Acknowledgment { response: r.reference(), timestamp: Self::ack_at(st) });
            }
        }
        for &(stage, seq, thumb) in &self.feedback {
            let st = steps.iter().find(|s| s.stage == stage && s.sequence_no == seq).expect("feedback targets a call");
            let response = self.response(st).reference();
            log.feedback.push(Feedback { response, thumb, timestamp: Self::feedback_at(st) });
        }
        log.responses = responses;
        log
    }

    pub fn record(&self, cohort: &Cohort) -> VisitRecord {
        let clinic = &cohort.clinics[self.clinic];
        VisitRecord {
            visit_id: self.visit_id.clone(),
            clinic_id: clinic.name.clone(),
            clinician_ids: cohort.clinician_ids(self),
            group: self.group,
            period: self.period,
            service_region: clinic.region,
            payment: self.payment,
            attending_minutes: self.attending_minutes,
            started_at: self.started_at,
            documentation: self.documentation(self.total_calls().saturating_sub(1)),
            alert_log: self.alert_log(),
        }
    }

    pub fn rating_forms(&self) -> Vec<RatingForm> {
        self.ratings
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut likert = BTreeMap::new();
                let mut failure_modes = BTreeMap::new();
                for (ci, c) in Category::ALL.into_iter().enumerate() {
                    likert.insert(c, r.likert[ci]);
                    if r.likert[ci] <= LIKERT_ERROR_MAX {
                        let opts = c.failure_mode_options();
                        let pick = (self.doc_seed as usize).wrapping_add(i) % opts.len();
                        failure_modes.insert(c, BTreeSet::from([opts[pick].to_string()]));
                    }
                }
                RatingForm {
                    visit_id: self.visit_id.clone(),
                    rater_id: r.rater_id.clone(),
                    rater_kind: r.kind,
                    likert,
                    failure_modes,
                    acuity: self.acuity,
                }
            })
            .collect()
    }

    /// Engine events that reproduce [`SimVisit::alert_log`] when replayed.
    pub fn journal(&self, cohort: &Cohort) -> Vec<EngineEvent> {
        let mut out = vec![EngineEvent::VisitCreated {
            visit_id: self.visit_id.clone(),
            meta: VisitMeta {
                shadow: self.shadow(),
                clinic_id: Some(cohort.clinics[self.clinic].name.clone()),
                clinician_ids: cohort.clinician_ids(self),
                group: Some(self.group),
                started_at: self.started_at,
            },
        }];
        for (k, st) in self.steps().iter().enumerate() {
            out.push(EngineEvent::FieldBlur(FieldBlurEvent {
                visit_id: self.visit_id.clone(),
                field: field_of(st.stage),
                snapshot: self.documentation(k),
                cause: BlurCause::UserNavigation,
                timestamp: st.blur_at,
            }));
            let response = self.response(st);
            let r = response.reference();
            let visible_red = response.is_visible_red();
            out.push(EngineEvent::ConsultCompleted { response });
            if visible_red {
                out.push(EngineEvent::Acknowledged { response: r.clone(), timestamp: Self::ack_at(st) });
            }
            if let Some(&(_, _, thumb)) = self.feedback.iter().find(|(s, q, _)| *s == st.stage && *q == st.sequence_no)
            {
                out.push(EngineEvent::Feedback { response: r, thumb, timestamp: Self::feedback_at(st) });
            }
        }
        out
    }
}

/// Gender as the analysis export spells it.
pub(crate) fn sex(g: Gender) -> safetynet_stats::analysis::Sex {
    match g {
        Gender::Female => safetynet_stats::analysis::Sex::Female,
        Gender::Male => safetynet_stats::analysis::Sex::Male,
    }
}
