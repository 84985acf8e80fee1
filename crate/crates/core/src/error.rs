use thiserror::Error;

use crate::domain::{ResponseRef, WorkflowStage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct DomainError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlertError {
    #[error("response {stage} #{got} is not newer than #{latest}")]
    OutOfOrder { stage: WorkflowStage, got: u64, latest: u64 },
    #[error("cannot acknowledge {0}: {1}")]
    InvalidAcknowledgment(ResponseRef, &'static str),
    #[error("feedback already recorded for {0}")]
    DuplicateFeedback(ResponseRef),
    #[error("cannot give feedback on {0}: {1}")]
    InvalidFeedback(ResponseRef, &'static str),
    #[error("response belongs to visit {got}, not {expected}")]
    WrongVisit { expected: String, got: String },
    #[error("invalid response: {0}")]
    Invalid(#[from] DomainError),
}

impl AlertError {
    pub fn code(&self) -> &'static str {
        match self {
            AlertError::OutOfOrder { .. } => "OutOfOrder",
            AlertError::InvalidAcknowledgment(..) => "InvalidAcknowledgment",
            AlertError::DuplicateFeedback(_) => "DuplicateFeedback",
            AlertError::InvalidFeedback(..) => "InvalidFeedback",
            AlertError::WrongVisit { .. } => "WrongVisit",
            AlertError::Invalid(_) => "ValidationError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsultError {
    #[error("model output is not valid JSON: {0}")]
    Parse(String),
    #[error("model output violates the response contract: {0}")]
    ContractViolation(String),
    #[error("gateway timed out after {0} ms")]
    Timeout(u64),
    #[error("gateway error{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Gateway { status: Option<u16>, message: String },
    #[error("consult was still running when the service stopped")]
    Interrupted,
}

impl ConsultError {
    pub fn code(&self) -> &'static str {
        match self {
            ConsultError::Parse(_) => "ParseError",
            ConsultError::ContractViolation(_) => "ContractViolation",
            ConsultError::Timeout(_) => "Timeout",
            ConsultError::Gateway { .. } => "GatewayError",
            ConsultError::Interrupted => "Interrupted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown visit {0}")]
    UnknownVisit(String),
    #[error("visit {0} already exists")]
    DuplicateVisit(String),
    #[error("unknown response {0}")]
    UnknownResponse(ResponseRef),
    #[error("no consult in flight for {0}")]
    NotInFlight(ResponseRef),
    #[error("validation: {0}")]
    Validation(#[from] DomainError),
    #[error(transparent)]
    Alert(#[from] AlertError),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownVisit(_) => "UnknownVisit",
            EngineError::DuplicateVisit(_) => "DuplicateVisit",
            EngineError::UnknownResponse(_) => "UnknownResponse",
            EngineError::NotInFlight(_) => "NotInFlight",
            EngineError::Validation(_) => "ValidationError",
            EngineError::Alert(e) => e.code(),
        }
    }
}
