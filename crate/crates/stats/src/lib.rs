//! Biostatistics toolbox for the safety-net evaluation: proportion intervals,
//! exact and rank tests, risk ratios, multiplicity control, agreement, and
//! log-link regression with cluster-robust inference.

pub mod agreement;
pub mod analysis;
pub mod bootstrap;
pub mod design;
pub mod error;
pub mod fisher;
pub mod interval;
pub mod multiplicity;
pub mod quantile;
pub mod rank;
pub mod regression;
pub mod risk;
pub mod table;
pub mod weighting;

pub use agreement::{fleiss_kappa, fleiss_kappa_binary, within_one_agreement};
pub use bootstrap::bootstrap_ci;
pub use design::SumToZero;
pub use error::{Result, StatsError};
pub use fisher::fisher_exact;
pub use interval::{wilson_counts, wilson_interval, z_critical};
pub use multiplicity::{benjamini_hochberg, BhResult};
pub use quantile::{median, quantile};
pub use rank::{mann_whitney_u, MannWhitney};
pub use regression::{
    fit_log_binomial_gee, fit_log_binomial_glm, fit_modified_poisson, wald_summary, CoefficientSummary, Design,
    FitOptions, FitResult, WorkingCorrelation,
};
pub use risk::{impact, risk_ratio, risk_ratio_weighted, Impact, RiskRatio};
pub use table::TwoByTwo;
pub use weighting::{weighted_error_rate, WeightedCount};
