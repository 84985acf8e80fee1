//! JSON endpoints over a [`ConsultRuntime`].
//!
//! Writes go through the runtime, which journals before committing, so a
//! response is only sent once the event is as durable as the journal promises.

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use safetynet_core::metrics::{self, RatePoint};
use safetynet_core::{
    AlertView, Category, Classifier, ConsultRuntime, EngineError, EngineEvent, FieldBlurEvent, Group, Outcome,
    ResponseRef, RuntimeError, Thumb, TriggerDecision, VisitMeta, WorkflowStage,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Error body: `{"error": <machine code>, "message": <text>}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { error: code.into(), message: message.into() } }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::UnknownVisit(_) | EngineError::UnknownResponse(_) => StatusCode::NOT_FOUND,
            EngineError::DuplicateVisit(_) => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<RuntimeError> for ApiError {
    fn from(e: RuntimeError) -> Self {
        match e {
            RuntimeError::Engine(e) => e.into(),
            RuntimeError::Sink(msg) => Self::new(StatusCode::SERVICE_UNAVAILABLE, "StorageUnavailable", msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Axum's own JSON extractor answers 415/422; every malformed body here is a 400.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request("InvalidJson", e.to_string()))
}

fn optional_body<T: DeserializeOwned + Default>(bytes: &Bytes) -> ApiResult<T> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        body(bytes)
    }
}

/// Journal and commit off the async workers; the append may fsync.
async fn submit(rt: &ConsultRuntime, ev: EngineEvent) -> ApiResult<Outcome> {
    let rt = rt.clone();
    let submitted = tokio::task::spawn_blocking(move || rt.submit(ev))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    Ok(submitted.outcome)
}

fn view(rt: &ConsultRuntime, visit_id: &str) -> ApiResult<AlertView> {
    rt.with_state(|s| s.log(visit_id).map(AlertView::of))
        .ok_or_else(|| EngineError::UnknownVisit(visit_id.to_string()).into())
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateVisit {
    pub visit_id: String,
    #[serde(default)]
    pub shadow: bool,
    #[serde(default)]
    pub clinic_id: Option<String>,
    #[serde(default)]
    pub clinician_ids: Vec<String>,
    #[serde(default)]
    pub group: Option<Group>,
    /// Defaults to the time of the request.
    #[serde(default)]
    pub started_at: Option<DateTime<Utc>>,
}

async fn create_visit(State(rt): State<ConsultRuntime>, bytes: Bytes) -> ApiResult<(StatusCode, Json<AlertView>)> {
    let req: CreateVisit = body(&bytes)?;
    let visit_id = req.visit_id.clone();
    let meta = VisitMeta {
        shadow: req.shadow,
        clinic_id: req.clinic_id,
        clinician_ids: req.clinician_ids,
        group: req.group,
        started_at: req.started_at.unwrap_or_else(Utc::now),
    };
    submit(&rt, EngineEvent::VisitCreated { visit_id: req.visit_id, meta }).await?;
    Ok((StatusCode::CREATED, Json(view(&rt, &visit_id)?)))
}

async fn field_blur(State(rt): State<ConsultRuntime>, bytes: Bytes) -> ApiResult<Json<TriggerDecision>> {
    let ev: FieldBlurEvent = body(&bytes)?;
    match submit(&rt, EngineEvent::FieldBlur(ev)).await? {
        Outcome::Decision { decision, .. } => Ok(Json(decision)),
        other => unreachable!("field blur produced {other:?}"),
    }
}

async fn alerts(State(rt): State<ConsultRuntime>, Path(id): Path<String>) -> ApiResult<Json<AlertView>> {
    Ok(Json(view(&rt, &id)?))
}

fn response_ref(id: &str) -> ApiResult<ResponseRef> {
    id.parse().map_err(|e: safetynet_core::DomainError| ApiError::bad_request("InvalidResponseRef", e.0))
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct AckBody {
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

async fn acknowledge(
    State(rt): State<ConsultRuntime>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult<Json<AlertView>> {
    let response = response_ref(&id)?;
    let req: AckBody = optional_body(&bytes)?;
    let visit_id = response.visit_id.clone();
    let timestamp = req.timestamp.unwrap_or_else(Utc::now);
    submit(&rt, EngineEvent::Acknowledged { response, timestamp }).await?;
    Ok(Json(view(&rt, &visit_id)?))
}

#[derive(Debug, Clone, Deserialize)]
pub struct FeedbackBody {
    pub thumb: Thumb,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

async fn feedback(
    State(rt): State<ConsultRuntime>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult<Json<AlertView>> {
    let response = response_ref(&id)?;
    let req: FeedbackBody = body(&bytes)?;
    let visit_id = response.visit_id.clone();
    let timestamp = req.timestamp.unwrap_or_else(Utc::now);
    submit(&rt, EngineEvent::Feedback { response, thumb: req.thumb, timestamp }).await?;
    Ok(Json(view(&rt, &visit_id)?))
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct MetricsQuery {
    pub group: Option<String>,
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBody {
    pub classifier: Classifier,
    pub category: Option<Category>,
    pub stages: Vec<WorkflowStage>,
    pub points: Vec<RatePointBody>,
}

/// [`RatePoint`] with the week as text, so clients can round-trip it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePointBody {
    pub week: String,
    pub group: Group,
    pub n: usize,
    pub events: usize,
    pub rate: Option<f64>,
}

impl From<RatePoint> for RatePointBody {
    fn from(p: RatePoint) -> Self {
        Self { week: p.week.to_string(), group: p.group, n: p.n, events: p.events, rate: p.rate }
    }
}

async fn metrics_series(
    State(rt): State<ConsultRuntime>,
    Path(classifier): Path<String>,
    Query(q): Query<MetricsQuery>,
) -> ApiResult<Json<MetricsBody>> {
    let bad = |e: safetynet_core::DomainError| ApiError::bad_request("InvalidQuery", e.0);
    let classifier: Classifier = classifier.parse().map_err(bad)?;
    let group: Option<Group> = q.group.as_deref().filter(|s| !s.is_empty()).map(str::parse).transpose().map_err(bad)?;
    let category: Option<Category> =
        q.category.as_deref().filter(|s| !s.is_empty()).map(str::parse).transpose().map_err(bad)?;
    let stages = category.map_or(WorkflowStage::ALL.to_vec(), |c| c.stages().to_vec());
    let visits = rt.with_state(metrics::from_engine);
    let points = metrics::weekly_rate(&visits, classifier, &stages)
        .into_iter()
        .filter(|p| group.is_none_or(|g| p.group == g))
        .map(RatePointBody::from)
        .collect();
    Ok(Json(MetricsBody { classifier, category, stages, points }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub visits: usize,
    pub in_flight: usize,
}

async fn healthz(State(rt): State<ConsultRuntime>) -> Json<Health> {
    let (visits, in_flight) = rt.with_state(|s| (s.visits.len(), s.visits.values().map(|v| v.in_flight()).sum()));
    Json(Health { status: "ok".into(), visits, in_flight })
}

pub fn router(rt: ConsultRuntime) -> Router {
    Router::new()
        .route("/visits", post(create_visit))
        .route("/events/field-blur", post(field_blur))
        .route("/visits/{id}/alerts", get(alerts))
        .route("/alerts/{id}/ack", post(acknowledge))
        .route("/alerts/{id}/feedback", post(feedback))
        .route("/metrics/{classifier}", get(metrics_series))
        .route("/healthz", get(healthz))
        .with_state(rt)
}
