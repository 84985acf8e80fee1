//! Per-visit alert lifecycle and the red-alert classifiers.
//!
//! Every transition validates first and mutates only on success.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{
    Acknowledgment, ConsultResponse, Feedback, ResponseRef, Severity, Thumb, VisitAlertLog, WorkflowStage,
};
use crate::error::AlertError;

pub fn apply_response(log: &mut VisitAlertLog, resp: ConsultResponse) -> Result<(), AlertError> {
    resp.validate()?;
    if resp.visit_id != log.visit_id {
        return Err(AlertError::WrongVisit { expected: log.visit_id.clone(), got: resp.visit_id });
    }
    let latest = log.responses.iter().filter(|r| r.stage == resp.stage).map(|r| r.sequence_no).max();
    if let Some(latest) = latest {
        if resp.sequence_no <= latest {
            return Err(AlertError::OutOfOrder { stage: resp.stage, got: resp.sequence_no, latest });
        }
    }
    // Ordered by (stage, sequence_no) so the log does not depend on cross-stage arrival order.
    let at = log.responses.partition_point(|r| r.stage <= resp.stage);
    log.responses.insert(at, resp);
    Ok(())
}

pub fn acknowledge(log: &mut VisitAlertLog, r: &ResponseRef, at: DateTime<Utc>) -> Result<(), AlertError> {
    let Some(resp) = log.find(r) else {
        return Err(AlertError::InvalidAcknowledgment(r.clone(), "no such response"));
    };
    if resp.shadow {
        return Err(AlertError::InvalidAcknowledgment(r.clone(), "shadow responses are not shown"));
    }
    if resp.severity != Some(Severity::Red) {
        return Err(AlertError::InvalidAcknowledgment(r.clone(), "only red responses need acknowledgment"));
    }
    if log.is_acknowledged(r) {
        return Err(AlertError::InvalidAcknowledgment(r.clone(), "already acknowledged"));
    }
    log.acknowledgments.push(Acknowledgment { response: r.clone(), timestamp: at });
    Ok(())
}

pub fn record_feedback(
    log: &mut VisitAlertLog,
    r: &ResponseRef,
    thumb: Thumb,
    at: DateTime<Utc>,
) -> Result<(), AlertError> {
    let Some(resp) = log.find(r) else {
        return Err(AlertError::InvalidFeedback(r.clone(), "no such response"));
    };
    if resp.shadow {
        return Err(AlertError::InvalidFeedback(r.clone(), "shadow responses are not shown"));
    }
    if resp.severity.is_none() {
        return Err(AlertError::InvalidFeedback(r.clone(), "error entries carry no verdict"));
    }
    if log.feedback.iter().any(|f| &f.response == r) {
        return Err(AlertError::DuplicateFeedback(r.clone()));
    }
    log.feedback.push(Feedback { response: r.clone(), thumb, timestamp: at });
    Ok(())
}

pub fn unacknowledged_reds(log: &VisitAlertLog) -> Vec<ResponseRef> {
    log.responses
        .iter()
        .filter(|r| r.is_visible_red())
        .map(ConsultResponse::reference)
        .filter(|r| !log.is_acknowledged(r))
        .collect()
}

/// A visit is blocked while any visible red lacks an acknowledgment.
pub fn blocked(log: &VisitAlertLog) -> bool {
    !unacknowledged_reds(log).is_empty()
}

/// Stages whose latest visible verdict is Yellow.
pub fn pending_advisories(log: &VisitAlertLog) -> Vec<ResponseRef> {
    WorkflowStage::ALL
        .iter()
        .filter_map(|&s| final_call(log, s))
        .filter(|r| r.severity == Some(Severity::Yellow) && !r.shadow)
        .map(ConsultResponse::reference)
        .collect()
}

fn colored(log: &VisitAlertLog, stage: WorkflowStage) -> impl Iterator<Item = &ConsultResponse> {
    log.responses.iter().filter(move |r| r.stage == stage && r.severity.is_some())
}

fn final_call(log: &VisitAlertLog, stage: WorkflowStage) -> Option<&ConsultResponse> {
    colored(log, stage).max_by_key(|r| r.sequence_no)
}

fn first_call(log: &VisitAlertLog, stage: WorkflowStage) -> Option<&ConsultResponse> {
    colored(log, stage).min_by_key(|r| r.sequence_no)
}

/// True iff the latest coloured call for any of `stages` is Red. Shadow
/// responses count; error entries do not.
pub fn left_in_red(log: &VisitAlertLog, stages: &[WorkflowStage]) -> bool {
    stages.iter().any(|&s| final_call(log, s).is_some_and(|r| r.severity == Some(Severity::Red)))
}

/// True iff the earliest coloured call for any of `stages` is Red.
pub fn started_red(log: &VisitAlertLog, stages: &[WorkflowStage]) -> bool {
    stages.iter().any(|&s| first_call(log, s).is_some_and(|r| r.severity == Some(Severity::Red)))
}

/// Severity of the latest coloured call for a stage.
pub fn final_severity(log: &VisitAlertLog, stage: WorkflowStage) -> Option<Severity> {
    final_call(log, stage).and_then(|r| r.severity)
}

/// Worst final severity across `stages`.
pub fn final_severity_over(log: &VisitAlertLog, stages: &[WorkflowStage]) -> Option<Severity> {
    stages.iter().filter_map(|&s| final_severity(log, s)).max()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    LeftInRed,
    StartedRed,
}

impl Classifier {
    pub fn classify(self, log: &VisitAlertLog, stages: &[WorkflowStage]) -> bool {
        match self {
            Classifier::LeftInRed => left_in_red(log, stages),
            Classifier::StartedRed => started_red(log, stages),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classifier::LeftInRed => "left-in-red",
            Classifier::StartedRed => "started-red",
        }
    }
}

impl std::str::FromStr for Classifier {
    type Err = crate::error::DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "left-in-red" => Ok(Classifier::LeftInRed),
            "started-red" => Ok(Classifier::StartedRed),
            _ => Err(crate::error::DomainError(format!("unknown classifier {s:?}"))),
        }
    }
}

/// Current alert surface for a visit, as served to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertView {
    pub log: VisitAlertLog,
    pub blocked: bool,
    pub unacknowledged_reds: Vec<ResponseRef>,
    pub advisories: Vec<ResponseRef>,
    pub left_in_red: bool,
    pub started_red: bool,
}

impl AlertView {
    pub fn of(log: &VisitAlertLog) -> Self {
        Self {
            blocked: blocked(log),
            unacknowledged_reds: unacknowledged_reds(log),
            advisories: pending_advisories(log),
            left_in_red: left_in_red(log, &WorkflowStage::ALL),
            started_red: started_red(log, &WorkflowStage::ALL),
            log: log.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(stage: WorkflowStage, seq: u64, sev: Severity, shadow: bool) -> ConsultResponse {
        ConsultResponse {
            visit_id: "v".into(),
            stage,
            severity: Some(sev),
            error: None,
            reason: "r".into(),
            action: "a".into(),
            shadow,
            model_id: "m".into(),
            latency_ms: 0,
            sequence_no: seq,
            timestamp: DateTime::UNIX_EPOCH,
        }
    }

    fn log_of(items: &[(WorkflowStage, Severity)]) -> VisitAlertLog {
        let mut log = VisitAlertLog::new("v");
        let mut seq = std::collections::HashMap::new();
        for &(stage, sev) in items {
            let n = seq.entry(stage).or_insert(0u64);
            *n += 1;
            apply_response(&mut log, resp(stage, *n, sev, false)).unwrap();
        }
        log
    }

    use WorkflowStage::*;

    #[test]
    fn red_blocks_until_acknowledged() {
        let mut log = VisitAlertLog::new("v");
        apply_response(&mut log, resp(Treatment, 1, Severity::Red, false)).unwrap();
        assert!(blocked(&log));
        let r = log.responses[0].reference();
        acknowledge(&mut log, &r, DateTime::UNIX_EPOCH).unwrap();
        assert!(!blocked(&log));
    }

    #[test]
    fn shadow_red_does_not_block() {
        let mut log = VisitAlertLog::new("v");
        apply_response(&mut log, resp(Treatment, 1, Severity::Red, true)).unwrap();
        assert!(!blocked(&log));
        assert_eq!(log.responses.len(), 1);
        let r = log.responses[0].reference();
        assert!(matches!(acknowledge(&mut log, &r, DateTime::UNIX_EPOCH), Err(AlertError::InvalidAcknowledgment(..))));
        assert!(matches!(
            record_feedback(&mut log, &r, Thumb::Up, DateTime::UNIX_EPOCH),
            Err(AlertError::InvalidFeedback(..))
        ));
    }

    #[test]
    fn two_reds_need_two_acks() {
        let mut log = log_of(&[(Diagnosis, Severity::Red), (Treatment, Severity::Red)]);
        let first = log.responses[0].reference();
        acknowledge(&mut log, &first, DateTime::UNIX_EPOCH).unwrap();
        assert!(blocked(&log));
    }

    #[test]
    fn yellow_cannot_be_acknowledged() {
        let mut log = log_of(&[(Diagnosis, Severity::Yellow)]);
        let r = log.responses[0].reference();
        assert!(matches!(acknowledge(&mut log, &r, DateTime::UNIX_EPOCH), Err(AlertError::InvalidAcknowledgment(..))));
        assert_eq!(pending_advisories(&log), vec![r]);
    }

    #[test]
    fn stale_sequence_is_rejected() {
        let mut log = log_of(&[(Diagnosis, Severity::Green), (Diagnosis, Severity::Green)]);
        let err = apply_response(&mut log, resp(Diagnosis, 2, Severity::Red, false)).unwrap_err();
        assert_eq!(err, AlertError::OutOfOrder { stage: Diagnosis, got: 2, latest: 2 });
        assert_eq!(log.responses.len(), 2);
    }

    #[test]
    fn left_in_red_examples() {
        let log = log_of(&[(Diagnosis, Severity::Red), (Diagnosis, Severity::Green), (Treatment, Severity::Yellow)]);
        assert!(!left_in_red(&log, &WorkflowStage::ALL));
        assert!(started_red(&log, &WorkflowStage::ALL));
        let log = log_of(&[(Treatment, Severity::Yellow), (Treatment, Severity::Red)]);
        assert!(left_in_red(&log, &WorkflowStage::ALL));
        assert!(!started_red(&log, &WorkflowStage::ALL));
        assert!(!left_in_red(&VisitAlertLog::new("v"), &WorkflowStage::ALL));
    }

    #[test]
    fn history_restriction() {
        let log = log_of(&[(VitalsChiefComplaint, Severity::Green), (Treatment, Severity::Red)]);
        assert!(!started_red(&log, &WorkflowStage::HISTORY_PAIR));
        assert!(started_red(&log, &WorkflowStage::ALL));
    }

    #[test]
    fn error_entries_are_ignored_by_classifiers() {
        let mut log = log_of(&[(Diagnosis, Severity::Red)]);
        let mut timeout = resp(Diagnosis, 2, Severity::Green, false);
        timeout.severity = None;
        timeout.error = Some("timeout".into());
        apply_response(&mut log, timeout).unwrap();
        assert!(left_in_red(&log, &[Diagnosis]));
    }

    #[test]
    fn duplicate_feedback() {
        let mut log = log_of(&[(Diagnosis, Severity::Yellow)]);
        let r = log.responses[0].reference();
        record_feedback(&mut log, &r, Thumb::Up, DateTime::UNIX_EPOCH).unwrap();
        assert_eq!(
            record_feedback(&mut log, &r, Thumb::Down, DateTime::UNIX_EPOCH),
            Err(AlertError::DuplicateFeedback(r))
        );
    }
}
