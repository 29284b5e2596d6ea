//! Conditional value at risk: exact values on finite distributions, the
//! order-statistic estimator on samples, and the machinery built on them.

mod analytic;
mod bootstrap;
mod empirical;
mod exact;
mod filtered;

use serde::{Deserialize, Serialize};

pub use analytic::{
    analytic_variance, normal_cdf, normal_pdf, normal_quantile, AnalyticCvar, VarianceLaw,
};
pub use bootstrap::{bootstrap_variance, log_log_slope, BootstrapResult};
pub use empirical::{
    calibrate_alpha, cdf_csv, cvar_empirical, gamma_prime_per_cnot, Calibration, Saturation,
    ValueSamples,
};
pub use exact::{
    cvar_exact, cvar_upper_exact, mixture_bounds, mixture_bounds_samples, FiniteDistribution,
    MixtureBounds,
};
pub use filtered::{cvar_filtered, cvar_nondiagonal, sample_group_values, FilteredCvar};

use crate::error::{Error, Result};

/// Which tail a CVaR averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Bottom `α` fraction; a lower bound for the noise-free mean.
    Lower,
    /// Top `α` fraction; an upper bound for the noise-free mean.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarReport {
    pub alpha: f64,
    pub side: Side,
    pub estimate: f64,
    /// `⌊α n⌋`
    pub kept: u64,
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// `⌊α n⌋`, robust to `α n` landing a rounding error below an integer.
pub(crate) fn kept_count(alpha: f64, n: u64) -> u64 {
    let raw = alpha * n as f64;
    let nearest = raw.round();
    if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        raw.floor() as u64
    }
}
