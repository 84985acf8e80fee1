//! HTTP service for the safety-net engine, persisted as an append-only JSON
//! Lines journal. State on startup is the fold of the journal.

pub mod api;
pub mod config;
pub mod journal;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use safetynet_core::consult::{ConsultGateway, HttpGateway, ReferenceGateway};
use safetynet_core::{ConsultRuntime, EngineState, EventSink};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub use api::{router, ErrorBody};
pub use config::{FsyncPolicy, RaterMode, ServiceConfig};
pub use journal::Journal;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid service config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("journal line {line} is corrupt: {message}")]
    Corrupt { line: usize, message: String },
    #[error("journal does not replay: {0}")]
    Replay(String),
    #[error("gateway: {0}")]
    Gateway(String),
}

/// Gateway and consult deadline for a config.
pub fn gateway(cfg: &ServiceConfig) -> Result<(Arc<dyn ConsultGateway>, Duration), ServiceError> {
    match cfg.rater_mode {
        RaterMode::Live => {
            let gw = cfg.gateway.clone().ok_or_else(|| ServiceError::Config("live mode needs a gateway".into()))?;
            let timeout = Duration::from_millis(gw.timeout_ms);
            let http = HttpGateway::new(gw).map_err(|e| ServiceError::Gateway(e.to_string()))?;
            Ok((Arc::new(http), timeout))
        }
        RaterMode::ReferenceStub => Ok((
            Arc::new(ReferenceGateway { delay: Duration::from_millis(cfg.stub_delay_ms) }),
            Duration::from_millis(cfg.stub_timeout_ms),
        )),
    }
}

/// Opens the journal, replays it, closes consults the previous process left
/// running, and wires the runtime to append to it.
pub fn open_runtime(cfg: &ServiceConfig) -> Result<ConsultRuntime, ServiceError> {
    cfg.validate()?;
    let (journal, loaded) = Journal::open(&cfg.journal_path(), cfg.fsync)?;
    let state = EngineState::replay(&loaded.events).map_err(|e| ServiceError::Replay(e.to_string()))?;
    tracing::info!(events = loaded.events.len(), visits = state.visits.len(), "journal replayed");
    let (gw, timeout) = gateway(cfg)?;
    let sink: Arc<dyn EventSink> = Arc::new(journal);
    let runtime = ConsultRuntime::new(state, gw, sink, timeout, cfg.max_in_flight);
    let closed = runtime.close_interrupted().map_err(|e| ServiceError::Io(e.to_string()))?;
    if !closed.is_empty() {
        tracing::warn!(consults = closed.len(), "closed consults interrupted by the last shutdown");
    }
    Ok(runtime)
}

/// A service bound to a socket and serving in the background.
pub struct Running {
    pub addr: SocketAddr,
    pub runtime: ConsultRuntime,
    pub task: JoinHandle<std::io::Result<()>>,
}

/// Binds `cfg.bind:cfg.port` (port 0 picks a free port) and starts serving.
pub async fn start(cfg: &ServiceConfig) -> Result<Running, ServiceError> {
    let runtime = open_runtime(cfg)?;
    let listener = TcpListener::bind((cfg.bind.as_str(), cfg.port))
        .await
        .map_err(|e| ServiceError::Io(format!("bind {}:{}: {e}", cfg.bind, cfg.port)))?;
    let addr = listener.local_addr().map_err(|e| ServiceError::Io(e.to_string()))?;
    let app = router(runtime.clone());
    let task = tokio::spawn(async move { axum::serve(listener, app).await });
    tracing::info!(%addr, "serving");
    Ok(Running { addr, runtime, task })
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(cfg: &ServiceConfig) -> Result<(), ServiceError> {
    let running = start(cfg).await?;
    eprintln!("listening on http://{}", running.addr);
    tokio::select! {
        r = running.task => match r {
            Ok(Ok(())) => Ok(()),
            Ok(Err(e)) => Err(ServiceError::Io(e.to_string())),
            Err(e) => Err(ServiceError::Io(e.to_string())),
        },
        _ = tokio::signal::ctrl_c() => Ok(()),
    }
}
