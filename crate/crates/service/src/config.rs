use std::path::PathBuf;

use safetynet_core::consult::GatewayConfig;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// When a journal append reaches stable storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsyncPolicy {
    /// `fsync` after every event; an accepted event survives power loss.
    #[default]
    Always,
    /// Flush to the OS only; survives a process crash but not power loss.
    Never,
}

/// Which gateway answers consults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RaterMode {
    /// HTTP model endpoint from `gateway`.
    Live,
    /// Deterministic rule-based answers; no network.
    #[default]
    ReferenceStub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Directory holding `events.jsonl`.
    pub storage_path: PathBuf,
    pub fsync: FsyncPolicy,
    pub rater_mode: RaterMode,
    /// Required in live mode.
    pub gateway: Option<GatewayConfig>,
    /// Consult deadline for the reference stub; live mode uses the gateway's.
    pub stub_timeout_ms: u64,
    pub stub_delay_ms: u64,
    pub max_in_flight: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            storage_path: PathBuf::from("data"),
            fsync: FsyncPolicy::Always,
            rater_mode: RaterMode::ReferenceStub,
            gateway: None,
            stub_timeout_ms: 3000,
            stub_delay_ms: 0,
            max_in_flight: 64,
        }
    }
}

pub const JOURNAL_FILE: &str = "events.jsonl";

impl ServiceConfig {
    pub fn from_json(text: &str) -> Result<Self, ServiceError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.rater_mode == RaterMode::Live && self.gateway.is_none() {
            return Err(ServiceError::Config("rater_mode \"live\" needs a gateway section".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ServiceError::Config("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }

    pub fn journal_path(&self) -> PathBuf {
        self.storage_path.join(JOURNAL_FILE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = ServiceConfig::from_json(r#"{"port": 9000, "storage_path": "/tmp/x", "fsync": "never"}"#).unwrap();
        assert_eq!((cfg.port, cfg.fsync, cfg.rater_mode), (9000, FsyncPolicy::Never, RaterMode::ReferenceStub));
        assert_eq!(cfg.journal_path(), PathBuf::from("/tmp/x/events.jsonl"));
    }

    #[test]
    fn live_mode_needs_a_gateway() {
        let err = ServiceConfig::from_json(r#"{"rater_mode": "live"}"#).unwrap_err();
        assert!(err.to_string().contains("gateway"));
        let ok = r#"{"rater_mode": "live", "gateway": {"endpoint": "http://x", "model_id": "m",
            "timeout_ms": 2000, "api_key_env": "KEY"}}"#;
        assert_eq!(ServiceConfig::from_json(ok).unwrap().rater_mode, RaterMode::Live);
    }
}
