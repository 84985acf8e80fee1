//! Async wrapper around [`EngineState`]: journals every accepted event through
//! an [`EventSink`] before committing it, and runs fired consults in the
//! background.

use std::sync::Arc;
use std::time::Duration;

use chrono::Utc;
use parking_lot::Mutex;
use tokio::sync::Semaphore;
use tokio::task::JoinHandle;

use crate::consult::{parse, request_consult, ConsultGateway, ConsultRequest, ResponseContext};
use crate::domain::{ConsultResponse, ResponseRef, WorkflowStage};
use crate::engine::{EngineEvent, EngineState, Outcome};
use crate::error::{ConsultError, EngineError};

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("journal write failed: {0}")]
    Sink(String),
}

/// Durable destination for accepted events. `append` must not return until the
/// event is as durable as the sink promises.
pub trait EventSink: Send + Sync {
    fn append(&self, ev: &EngineEvent) -> Result<(), String>;
}

/// Discards events.
pub struct NullSink;

impl EventSink for NullSink {
    fn append(&self, _ev: &EngineEvent) -> Result<(), String> {
        Ok(())
    }
}

/// Keeps events in memory, in acceptance order.
#[derive(Default)]
pub struct MemorySink {
    pub events: Mutex<Vec<EngineEvent>>,
}

impl EventSink for MemorySink {
    fn append(&self, ev: &EngineEvent) -> Result<(), String> {
        self.events.lock().push(ev.clone());
        Ok(())
    }
}

pub struct DispatchHandle {
    pub reference: ResponseRef,
    pub join: JoinHandle<()>,
}

pub struct Submitted {
    pub outcome: Outcome,
    pub dispatch: Option<DispatchHandle>,
}

struct Inner {
    state: Mutex<EngineState>,
    gateway: Arc<dyn ConsultGateway>,
    sink: Arc<dyn EventSink>,
    timeout: Duration,
    permits: Semaphore,
}

#[derive(Clone)]
pub struct ConsultRuntime {
    inner: Arc<Inner>,
}

impl ConsultRuntime {
    pub fn new(
        state: EngineState,
        gateway: Arc<dyn ConsultGateway>,
        sink: Arc<dyn EventSink>,
        timeout: Duration,
        max_in_flight: usize,
    ) -> Self {
        Self {
            inner: Arc::new(Inner {
                state: Mutex::new(state),
                gateway,
                sink,
                timeout,
                permits: Semaphore::new(max_in_flight.max(1)),
            }),
        }
    }

    pub fn snapshot(&self) -> EngineState {
        self.inner.state.lock().clone()
    }

    pub fn with_state<T>(&self, f: impl FnOnce(&EngineState) -> T) -> T {
        f(&self.inner.state.lock())
    }

    /// Validates, journals, and commits one event. A fired trigger starts its
    /// consult in the background; this call never waits for the model.
    pub fn submit(&self, ev: EngineEvent) -> Result<Submitted, RuntimeError> {
        let outcome = {
            let mut state = self.inner.state.lock();
            let prepared = state.prepare(&ev)?;
            self.inner.sink.append(&ev).map_err(RuntimeError::Sink)?;
            state.commit(prepared)
        };
        let dispatch = match &outcome {
            Outcome::Decision { request: Some(req), .. } => Some(self.dispatch(req.clone())),
            _ => None,
        };
        Ok(Submitted { outcome, dispatch })
    }

    /// Closes consults that were in flight when the journal was last written.
    /// Their tasks died with the previous process, and an open sequence
    /// number would hold back every later completion of its stage.
    pub fn close_interrupted(&self) -> Result<Vec<ResponseRef>, RuntimeError> {
        let orphans: Vec<ResponseRef> = self.with_state(|s| {
            s.visits
                .iter()
                .flat_map(|(visit_id, v)| {
                    v.triggers.iter().flat_map(move |(&stage, t)| {
                        t.in_flight.keys().map(move |&sequence_no| ResponseRef {
                            visit_id: visit_id.clone(),
                            stage,
                            sequence_no,
                        })
                    })
                })
                .collect()
        });
        let model_id = self.inner.gateway.model_id().to_string();
        for r in &orphans {
            let ctx = ResponseContext {
                visit_id: r.visit_id.clone(),
                sequence_no: r.sequence_no,
                shadow: false,
                model_id: model_id.clone(),
                timestamp: Utc::now(),
            };
            let response = unavailable(r.stage, &ctx, &ConsultError::Interrupted, 0);
            self.submit(EngineEvent::ConsultCompleted { response })?;
        }
        Ok(orphans)
    }

    fn dispatch(&self, req: ConsultRequest) -> DispatchHandle {
        let reference = ResponseRef { visit_id: req.visit_id.clone(), stage: req.stage, sequence_no: req.sequence_no };
        let rt = self.clone();
        let join = tokio::spawn(async move {
            let response = rt.run_consult(&req).await;
            if let Err(e) = rt.submit(EngineEvent::ConsultCompleted { response }) {
                tracing::error!(visit = %req.visit_id, stage = %req.stage, seq = req.sequence_no, "dropping consult completion: {e}");
            }
        });
        DispatchHandle { reference, join }
    }

    async fn run_consult(&self, req: &ConsultRequest) -> ConsultResponse {
        let _permit = self.inner.permits.acquire().await.expect("semaphore never closes");
        let gateway = self.inner.gateway.as_ref();
        let ctx = ResponseContext {
            visit_id: req.visit_id.clone(),
            sequence_no: req.sequence_no,
            shadow: false,
            model_id: gateway.model_id().to_string(),
            timestamp: Utc::now(),
        };
        let result = request_consult(gateway, req, self.inner.timeout).await;
        let latency_ms = result.as_ref().map(|r| r.latency_ms).unwrap_or(self.inner.timeout.as_millis() as u64);
        match result.and_then(|raw| parse(&raw, req.stage, &ctx)) {
            Ok(resp) => resp,
            Err(e) => error_entry(req, &ctx, &e, latency_ms),
        }
    }
}

/// Error-marked response: no severity, so the classifiers skip it.
pub fn error_entry(
    req: &ConsultRequest,
    ctx: &ResponseContext,
    err: &ConsultError,
    latency_ms: u64,
) -> ConsultResponse {
    unavailable(req.stage, ctx, err, latency_ms)
}

fn unavailable(stage: WorkflowStage, ctx: &ResponseContext, err: &ConsultError, latency_ms: u64) -> ConsultResponse {
    ConsultResponse {
        visit_id: ctx.visit_id.clone(),
        stage,
        severity: None,
        error: Some(err.code().to_string()),
        reason: format!("Consult unavailable: {err}"),
        action: "No recommendation; continue with usual clinical judgement.".into(),
        shadow: ctx.shadow,
        model_id: ctx.model_id.clone(),
        latency_ms,
        sequence_no: ctx.sequence_no,
        timestamp: ctx.timestamp,
    }
}
