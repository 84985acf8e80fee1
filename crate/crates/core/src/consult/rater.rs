//! Visit rating: instructions for a model rater, reply parsing, and the
//! deterministic stub derived from the reference rules.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use super::reference::{reference_verdict, Rule};
use crate::domain::{
    Acuity, Category, DocumentationState, RaterKind, RatingForm, Severity, WorkflowStage, LIKERT_ERROR_MAX,
};
use crate::error::ConsultError;
use crate::prompt::{render_user, PromptPair};

pub const RATER_INSTRUCTIONS: &str = include_str!("../../resources/rater/v1.txt");

/// Rater prompt: fixed instructions plus the full visit documentation.
pub fn rater_prompt(doc: &DocumentationState) -> PromptPair {
    PromptPair {
        stage: WorkflowStage::Treatment,
        system_text: RATER_INSTRUCTIONS.to_string(),
        user_text: render_user(WorkflowStage::Treatment, doc),
    }
}

#[derive(Deserialize)]
struct RatingReply {
    likert: BTreeMap<String, u8>,
    #[serde(default)]
    failure_modes: BTreeMap<String, Vec<String>>,
    acuity: String,
}

pub fn parse_rating(text: &str, visit_id: &str, rater_id: &str) -> Result<RatingForm, ConsultError> {
    let t = text.trim();
    let t = t.strip_prefix("```json").or_else(|| t.strip_prefix("```")).unwrap_or(t);
    let t = t.strip_suffix("```").unwrap_or(t);
    let reply: RatingReply = serde_json::from_str(t.trim()).map_err(|e| ConsultError::Parse(e.to_string()))?;
    let bad = |m: String| ConsultError::ContractViolation(m);

    let mut likert = BTreeMap::new();
    for (k, v) in reply.likert {
        likert.insert(k.parse::<Category>().map_err(|e| bad(e.0))?, v);
    }
    let mut failure_modes = BTreeMap::new();
    for (k, v) in reply.failure_modes {
        failure_modes.insert(k.parse::<Category>().map_err(|e| bad(e.0))?, v.into_iter().collect::<BTreeSet<_>>());
    }
    let acuity = match reply.acuity.trim().to_ascii_lowercase().as_str() {
        "low" => Acuity::Low,
        "medium" => Acuity::Medium,
        "high" => Acuity::High,
        other => return Err(bad(format!("unknown acuity {other:?}"))),
    };
    let form = RatingForm {
        visit_id: visit_id.into(),
        rater_id: rater_id.into(),
        rater_kind: RaterKind::Model,
        likert,
        failure_modes,
        acuity,
    };
    form.validate().map_err(|e| bad(e.0))?;
    Ok(form)
}

fn likert_for(sev: Severity) -> u8 {
    match sev {
        Severity::Red => 2,
        Severity::Yellow => 3,
        Severity::Green => 5,
    }
}

fn failure_mode_for(rule: Rule) -> Option<(Category, &'static str)> {
    match rule {
        Rule::R1 | Rule::R2 | Rule::R4 => Some((Category::History, "Pertinent vital signs are absent")),
        Rule::R6 => Some((Category::Treatment, "Medications are missing")),
        _ => None,
    }
}

/// Stub rating: each stage's reference severity maps to a Likert score
/// (Red 2, Yellow 3, Green 5); a category takes its worst stage. Failure modes
/// are listed only for categories rated as errors.
pub fn rate_visit_reference(doc: &DocumentationState, visit_id: &str, rater_id: &str) -> RatingForm {
    let mut likert: BTreeMap<Category, u8> = Category::ALL.iter().map(|&c| (c, 5)).collect();
    let mut modes: BTreeMap<Category, BTreeSet<String>> = BTreeMap::new();
    let mut worst = Severity::Green;
    for stage in WorkflowStage::ALL {
        let rv = reference_verdict(stage, doc);
        let sev = rv.verdict.severity;
        worst = worst.max(sev);
        let slot = likert.get_mut(&stage.category()).expect("all categories present");
        *slot = (*slot).min(likert_for(sev));
        if let Some((cat, mode)) = failure_mode_for(rv.rule) {
            if likert_for(sev) <= LIKERT_ERROR_MAX {
                modes.entry(cat).or_default().insert(mode.to_string());
            }
        }
    }
    let acuity = match worst {
        Severity::Red => Acuity::High,
        Severity::Yellow => Acuity::Medium,
        Severity::Green => Acuity::Low,
    };
    RatingForm {
        visit_id: visit_id.into(),
        rater_id: rater_id.into(),
        rater_kind: RaterKind::Model,
        likert,
        failure_modes: modes,
        acuity,
    }
}

/// Rates a visit with a live model through `gateway`.
pub async fn rate_visit(
    gateway: &dyn super::ConsultGateway,
    doc: &DocumentationState,
    visit_id: &str,
    rater_id: &str,
    timeout: std::time::Duration,
) -> Result<RatingForm, ConsultError> {
    let req = super::ConsultRequest {
        visit_id: visit_id.into(),
        stage: WorkflowStage::Treatment,
        sequence_no: 0,
        prompt: rater_prompt(doc),
        doc: doc.clone(),
    };
    let raw = super::request_consult(gateway, &req, timeout).await?;
    parse_rating(&raw.text, visit_id, rater_id)
}
