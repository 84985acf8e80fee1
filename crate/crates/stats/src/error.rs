use thiserror::Error;

pub type Result<T, E = StatsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero events in the {arm} arm; risk ratio is undefined without a continuity correction")]
    ZeroCell { arm: &'static str },

    #[error("fit did not converge after {iterations} iterations (max |step| = {last_step:e})")]
    Convergence { iterations: usize, last_step: f64, estimates: Vec<f64> },

    #[error("fitted probability stayed at or above 1 after {halvings} step halvings")]
    Boundary { halvings: usize, estimates: Vec<f64> },

    #[error("information matrix is singular; check the design for collinear columns")]
    Singular,

    #[error("analysis input: {0}")]
    Input(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(StatsError::Domain(msg.into()))
}
