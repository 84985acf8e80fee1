//! Event-sourced engine state.
//!
//! `EngineState` is a pure fold over [`EngineEvent`]s: replaying a journal
//! reproduces the live state exactly. Each event is validated against a copy of
//! the affected visit ([`EngineState::prepare`]) and only then committed, so a
//! rejected or unjournaled event leaves the state untouched.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::alert;
use crate::consult::ConsultRequest;
use crate::domain::{
    ConsultResponse, DocumentationState, Group, ResponseRef, Thumb, VisitAlertLog, VisitId, WorkflowStage,
};
use crate::error::{DomainError, EngineError};
use crate::prompt;
use crate::trigger::{decide, FieldBlurEvent, StageTrigger, TriggerDecision};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitMeta {
    #[serde(default)]
    pub shadow: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clinic_id: Option<String>,
    #[serde(default)]
    pub clinician_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Group>,
    pub started_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineEvent {
    VisitCreated {
        visit_id: VisitId,
        #[serde(flatten)]
        meta: VisitMeta,
    },
    FieldBlur(FieldBlurEvent),
    ConsultCompleted {
        response: ConsultResponse,
    },
    Acknowledged {
        response: ResponseRef,
        timestamp: DateTime<Utc>,
    },
    Feedback {
        response: ResponseRef,
        thumb: Thumb,
        timestamp: DateTime<Utc>,
    },
}

impl EngineEvent {
    pub fn visit_id(&self) -> &str {
        match self {
            EngineEvent::VisitCreated { visit_id, .. } => visit_id,
            EngineEvent::FieldBlur(e) => &e.visit_id,
            EngineEvent::ConsultCompleted { response } => &response.visit_id,
            EngineEvent::Acknowledged { response, .. } | EngineEvent::Feedback { response, .. } => &response.visit_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitSession {
    pub meta: VisitMeta,
    pub doc: Option<DocumentationState>,
    pub triggers: BTreeMap<WorkflowStage, StageTrigger>,
    pub log: VisitAlertLog,
    /// Completions waiting for an earlier sequence number of the same stage.
    pub pending: BTreeMap<WorkflowStage, BTreeMap<u64, ConsultResponse>>,
    /// Next sequence number to apply per stage.
    pub next_apply: BTreeMap<WorkflowStage, u64>,
    pub fired: u64,
}

impl VisitSession {
    fn new(visit_id: &str, meta: VisitMeta) -> Self {
        Self {
            meta,
            doc: None,
            triggers: BTreeMap::new(),
            log: VisitAlertLog::new(visit_id),
            pending: BTreeMap::new(),
            next_apply: BTreeMap::new(),
            fired: 0,
        }
    }

    pub fn in_flight(&self) -> usize {
        self.triggers.values().map(|t| t.in_flight.len()).sum::<usize>()
    }
}

/// What an accepted event did.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Created,
    Decision { decision: TriggerDecision, request: Option<ConsultRequest> },
    Completed { applied: Vec<ResponseRef> },
    Acknowledged,
    FeedbackRecorded,
}

/// A validated, not yet committed event.
#[derive(Debug, Clone)]
pub struct Prepared {
    visit_id: VisitId,
    session: VisitSession,
    outcome: Outcome,
}

impl Prepared {
    pub fn outcome(&self) -> &Outcome {
        &self.outcome
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub visits: BTreeMap<VisitId, VisitSession>,
}

impl EngineState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn replay<'a>(events: impl IntoIterator<Item = &'a EngineEvent>) -> Result<Self, EngineError> {
        let mut state = Self::new();
        for ev in events {
            state.apply(ev)?;
        }
        Ok(state)
    }

    pub fn apply(&mut self, ev: &EngineEvent) -> Result<Outcome, EngineError> {
        let prepared = self.prepare(ev)?;
        Ok(self.commit(prepared))
    }

    pub fn commit(&mut self, p: Prepared) -> Outcome {
        self.visits.insert(p.visit_id, p.session);
        p.outcome
    }

    pub fn log(&self, visit_id: &str) -> Option<&VisitAlertLog> {
        self.visits.get(visit_id).map(|s| &s.log)
    }

    pub fn prepare(&self, ev: &EngineEvent) -> Result<Prepared, EngineError> {
        let visit_id = ev.visit_id().to_string();
        if visit_id.is_empty() {
            return Err(DomainError("visit_id is empty".into()).into());
        }
        let existing = self.visits.get(&visit_id);
        let (session, outcome) = match ev {
            EngineEvent::VisitCreated { meta, .. } => {
                if existing.is_some() {
                    return Err(EngineError::DuplicateVisit(visit_id));
                }
                (VisitSession::new(&visit_id, meta.clone()), Outcome::Created)
            }
            EngineEvent::FieldBlur(blur) => {
                blur.snapshot.validate()?;
                // First contact registers the visit.
                let mut s = existing.cloned().unwrap_or_else(|| {
                    VisitSession::new(
                        &visit_id,
                        VisitMeta {
                            shadow: false,
                            clinic_id: None,
                            clinician_ids: Vec::new(),
                            group: None,
                            started_at: blur.timestamp,
                        },
                    )
                });
                let stage = blur.field.stage();
                let mut decision = decide(blur, s.triggers.get(&stage));
                s.doc = Some(blur.snapshot.clone());
                let request = if decision.fire {
                    let hash = decision.content_hash.clone().expect("fired decisions carry a hash");
                    let seq = s.triggers.entry(stage).or_insert_with(StageTrigger::new).fire(hash);
                    s.fired += 1;
                    decision.sequence_no = Some(seq);
                    Some(ConsultRequest {
                        visit_id: visit_id.clone(),
                        stage,
                        sequence_no: seq,
                        prompt: prompt::build(stage, &blur.snapshot),
                        doc: blur.snapshot.clone(),
                    })
                } else {
                    None
                };
                (s, Outcome::Decision { decision, request })
            }
            EngineEvent::ConsultCompleted { response } => {
                let mut s = existing.cloned().ok_or_else(|| EngineError::UnknownVisit(visit_id.clone()))?;
                response.validate()?;
                let r = response.reference();
                let trig = s.triggers.get_mut(&r.stage).ok_or_else(|| EngineError::NotInFlight(r.clone()))?;
                if trig.in_flight.remove(&r.sequence_no).is_none() {
                    return Err(EngineError::NotInFlight(r));
                }
                let mut resp = response.clone();
                resp.shadow = s.meta.shadow;
                s.pending.entry(r.stage).or_default().insert(r.sequence_no, resp);
                let applied = drain_ready(&mut s, r.stage)?;
                (s, Outcome::Completed { applied })
            }
            EngineEvent::Acknowledged { response, timestamp } => {
                let mut s = existing.cloned().ok_or_else(|| EngineError::UnknownVisit(visit_id.clone()))?;
                alert::acknowledge(&mut s.log, response, *timestamp)?;
                (s, Outcome::Acknowledged)
            }
            EngineEvent::Feedback { response, thumb, timestamp } => {
                let mut s = existing.cloned().ok_or_else(|| EngineError::UnknownVisit(visit_id.clone()))?;
                alert::record_feedback(&mut s.log, response, *thumb, *timestamp)?;
                (s, Outcome::FeedbackRecorded)
            }
        };
        Ok(Prepared { visit_id, session, outcome })
    }
}

/// Applies buffered completions for `stage` in sequence order, stopping at the first gap.
fn drain_ready(s: &mut VisitSession, stage: WorkflowStage) -> Result<Vec<ResponseRef>, EngineError> {
    let mut applied = Vec::new();
    let next = s.next_apply.entry(stage).or_insert(1);
    let buffer = s.pending.entry(stage).or_default();
    while let Some(resp) = buffer.remove(next) {
        applied.push(resp.reference());
        alert::apply_response(&mut s.log, resp)?;
        *next += 1;
    }
    if buffer.is_empty() {
        s.pending.remove(&stage);
    }
    Ok(applied)
}
