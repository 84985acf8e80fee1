//! Field-blur trigger rules.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{DocumentationState, VisitId, WorkflowStage};
use crate::prompt::content_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlurField {
    ChiefComplaint,
    ClinicalNotes,
    Investigations,
    Diagnosis,
    Medications,
}

impl BlurField {
    pub fn stage(self) -> WorkflowStage {
        match self {
            BlurField::ChiefComplaint => WorkflowStage::VitalsChiefComplaint,
            BlurField::ClinicalNotes => WorkflowStage::ClinicalNotes,
            BlurField::Investigations => WorkflowStage::Investigations,
            BlurField::Diagnosis => WorkflowStage::Diagnosis,
            BlurField::Medications => WorkflowStage::Treatment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlurCause {
    UserNavigation,
    AlertAcknowledgment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldBlurEvent {
    pub visit_id: VisitId,
    pub field: BlurField,
    pub snapshot: DocumentationState,
    pub cause: BlurCause,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressionReason {
    AcknowledgmentCause,
    UnchangedContent,
    DuplicateInFlight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerDecision {
    pub fire: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<WorkflowStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suppression_reason: Option<SuppressionReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_hash: Option<String>,
    /// Assigned when the call fires.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_no: Option<u64>,
}

impl TriggerDecision {
    fn suppressed(stage: Option<WorkflowStage>, reason: SuppressionReason, hash: Option<String>) -> Self {
        Self { fire: false, stage, suppression_reason: Some(reason), content_hash: hash, sequence_no: None }
    }
}

/// Per-(visit, stage) trigger bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTrigger {
    /// Sequence number the next fired call receives (starts at 1).
    pub next_seq: u64,
    pub last_fired_hash: Option<String>,
    /// Fired calls without a completion yet: sequence_no → content hash.
    pub in_flight: BTreeMap<u64, String>,
}

impl StageTrigger {
    pub fn new() -> Self {
        Self { next_seq: 1, last_fired_hash: None, in_flight: BTreeMap::new() }
    }

    /// Records a fired call and returns its sequence number.
    pub fn fire(&mut self, hash: String) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.last_fired_hash = Some(hash.clone());
        self.in_flight.insert(seq, hash);
        seq
    }
}

/// Pure trigger decision. Rules, first match wins: acknowledgment-caused blurs
/// never fire; a hash equal to the last fired one never fires; a hash already
/// in flight never fires.
pub fn decide(event: &FieldBlurEvent, state: Option<&StageTrigger>) -> TriggerDecision {
    let stage = event.field.stage();
    if event.cause == BlurCause::AlertAcknowledgment {
        return TriggerDecision::suppressed(Some(stage), SuppressionReason::AcknowledgmentCause, None);
    }
    let hash = content_hash(stage, &event.snapshot);
    if let Some(st) = state {
        if st.last_fired_hash.as_deref() == Some(hash.as_str()) {
            return TriggerDecision::suppressed(Some(stage), SuppressionReason::UnchangedContent, Some(hash));
        }
        if st.in_flight.values().any(|h| *h == hash) {
            return TriggerDecision::suppressed(Some(stage), SuppressionReason::DuplicateInFlight, Some(hash));
        }
    }
    TriggerDecision {
        fire: true,
        stage: Some(stage),
        suppression_reason: None,
        content_hash: Some(hash),
        sequence_no: None,
    }
}
