//! Traffic-light clinical safety-net engine.
//!
//! Field-blur events go through the [`trigger`] rules. Fired stages are rendered by
//! [`prompt`] and sent to a [`consult`] gateway. Responses are folded into a
//! per-visit alert log by [`alert`], and [`engine`] keeps the whole thing
//! replayable from an event journal.

pub mod alert;
pub mod consult;
pub mod domain;
pub mod eligibility;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod prompt;
pub mod runtime;
pub mod trigger;

pub use alert::{AlertView, Classifier};
pub use domain::*;
pub use engine::{EngineEvent, EngineState, Outcome, VisitMeta, VisitSession};
pub use error::{AlertError, ConsultError, DomainError, EngineError};
pub use runtime::{ConsultRuntime, EventSink, MemorySink, NullSink, RuntimeError};
pub use trigger::{BlurCause, BlurField, FieldBlurEvent, SuppressionReason, TriggerDecision};
