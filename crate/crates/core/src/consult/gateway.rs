use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::parse::render_contract;
use super::reference::{reference_verdict, REFERENCE_MODEL_ID};
use crate::domain::{DocumentationState, VisitId, WorkflowStage};
use crate::error::ConsultError;
use crate::prompt::PromptPair;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub endpoint: String,
    pub model_id: String,
    pub timeout_ms: u64,
    /// Name of the environment variable that holds the API credential.
    pub api_key_env: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawModelOutput {
    pub text: String,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsultRequest {
    pub visit_id: VisitId,
    pub stage: WorkflowStage,
    pub sequence_no: u64,
    pub prompt: PromptPair,
    pub doc: DocumentationState,
}

#[async_trait]
pub trait ConsultGateway: Send + Sync {
    fn model_id(&self) -> &str;

    /// Returns the model's raw text for one consult.
    async fn complete(&self, req: &ConsultRequest) -> Result<String, ConsultError>;
}

/// Runs one consult under a deadline and records its latency.
pub async fn request_consult(
    gateway: &dyn ConsultGateway,
    req: &ConsultRequest,
    timeout: Duration,
) -> Result<RawModelOutput, ConsultError> {
    let start = Instant::now();
    let text = tokio::time::timeout(timeout, gateway.complete(req))
        .await
        .map_err(|_| ConsultError::Timeout(timeout.as_millis() as u64))??;
    Ok(RawModelOutput { text, latency_ms: start.elapsed().as_millis() as u64 })
}

/// Chat-completions style HTTP gateway (system + user message, temperature 0).
pub struct HttpGateway {
    cfg: GatewayConfig,
    client: reqwest::Client,
}

impl HttpGateway {
    pub fn new(cfg: GatewayConfig) -> Result<Self, ConsultError> {
        if cfg.timeout_ms == 0 {
            return Err(ConsultError::Gateway { status: None, message: "timeout_ms must be positive".into() });
        }
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| ConsultError::Gateway { status: None, message: e.to_string() })?;
        Ok(Self { cfg, client })
    }
}

#[async_trait]
impl ConsultGateway for HttpGateway {
    fn model_id(&self) -> &str {
        &self.cfg.model_id
    }

    async fn complete(&self, req: &ConsultRequest) -> Result<String, ConsultError> {
        let key = std::env::var(&self.cfg.api_key_env).map_err(|_| ConsultError::Gateway {
            status: None,
            message: format!("credential variable {} is not set", self.cfg.api_key_env),
        })?;
        let body = json!({
            "model": self.cfg.model_id,
            "temperature": 0,
            "messages": [
                { "role": "system", "content": req.prompt.system_text },
                { "role": "user", "content": req.prompt.user_text },
            ],
        });
        let resp = self.client.post(&self.cfg.endpoint).bearer_auth(key).json(&body).send().await.map_err(|e| {
            if e.is_timeout() {
                ConsultError::Timeout(self.cfg.timeout_ms)
            } else {
                ConsultError::Gateway { status: None, message: e.to_string() }
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let message = resp.text().await.unwrap_or_default();
            return Err(ConsultError::Gateway { status: Some(status.as_u16()), message });
        }
        let value: Value = resp
            .json()
            .await
            .map_err(|e| ConsultError::Gateway { status: Some(status.as_u16()), message: e.to_string() })?;
        value["choices"][0]["message"]["content"].as_str().map(str::to_string).ok_or_else(|| ConsultError::Gateway {
            status: Some(status.as_u16()),
            message: "response has no choices[0].message.content".into(),
        })
    }
}

/// Canned reply after a fixed delay.
pub struct StubGateway {
    pub text: String,
    pub delay: Duration,
    pub model_id: String,
}

impl StubGateway {
    pub fn new(text: impl Into<String>, delay: Duration) -> Self {
        Self { text: text.into(), delay, model_id: "stub".into() }
    }
}

#[async_trait]
impl ConsultGateway for StubGateway {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    async fn complete(&self, _req: &ConsultRequest) -> Result<String, ConsultError> {
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        Ok(self.text.clone())
    }
}

/// Answers with the reference rules, rendered through the response contract.
#[derive(Debug, Clone, Default)]
pub struct ReferenceGateway {
    pub delay: Duration,
}

#[async_trait]
impl ConsultGateway for ReferenceGateway {
    fn model_id(&self) -> &str {
        REFERENCE_MODEL_ID
    }

    async fn complete(&self, req: &ConsultRequest) -> Result<String, ConsultError> {
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        let v = reference_verdict(req.stage, &req.doc).verdict;
        Ok(render_contract(v.severity, &v.reason, &v.action))
    }
}
