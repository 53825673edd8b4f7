//! Bayes factors `BF01` for a normally distributed estimate and for the
//! informed t-test, together with the critical statistic values at which a
//! Bayes factor equals a threshold `k`.
//!
//! All z-based Bayes factors are evaluated on the log scale and only
//! exponentiated at the end, so extreme statistics do not overflow.

mod ttest;
mod zfamilies;

pub use ttest::{bf01_t, critical_t, log_bf01_t, InformedT};
pub use zfamilies::{bf01_z, critical_z, log_bf01_z};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BfError {
    #[error("invalid analysis prior: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{context}: {source}")]
    Numerics {
        context: String,
        #[source]
        source: NumericsError,
    },
}

impl From<NumericsError> for BfError {
    fn from(source: NumericsError) -> Self {
        BfError::Numerics {
            context: "numerical failure".to_string(),
            source,
        }
    }
}

/// A standardised estimate `z = θ̂ / σ` together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZObservation {
    pub z: f64,
    pub sigma: f64,
}

impl ZObservation {
    pub fn new(z: f64, sigma: f64) -> Result<Self, BfError> {
        if !z.is_finite() {
            return Err(BfError::InvalidArgument(format!(
                "z must be finite, got {z}"
            )));
        }
        check_sigma(sigma)?;
        Ok(Self { z, sigma })
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<(), BfError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(BfError::InvalidArgument(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// The prior inside a Bayes factor.
///
/// The four z-based families test `θ = 0` (or `θ ≤ 0`) against a normal
/// alternative; `InformedT` is the t-test Bayes factor with a truncated
/// location-scale t prior on the standardised effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisPriorSpec {
    /// `H0: θ ≤ 0` vs `H1: θ > 0` with `θ ~ N(mu, tau²)`.
    DirectionalDirectional {
        mu: f64,
        tau: f64,
    },
    /// `H0: θ = 0` vs `H1: θ = mu`.
    PointPoint {
        mu: f64,
    },
    /// `H0: θ = 0` vs `H1: θ ~ N(mu, tau²)`.
    PointTwoSided {
        mu: f64,
        tau: f64,
    },
    /// `H0: θ = 0` vs `H1: θ ~ N(mu, tau²)` truncated to `(0, ∞)`.
    PointDirectional {
        mu: f64,
        tau: f64,
    },
    InformedT(InformedT),
}

impl AnalysisPriorSpec {
    pub fn validate(&self) -> Result<(), BfError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(BfError::InvalidSpec(format!(
                    "{name} must be finite, got {v}"
                )))
            }
        };
        let scale = |v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(BfError::InvalidSpec(format!(
                    "tau must be positive, got {v}"
                )))
            }
        };
        match *self {
            AnalysisPriorSpec::DirectionalDirectional { mu, tau }
            | AnalysisPriorSpec::PointTwoSided { mu, tau }
            | AnalysisPriorSpec::PointDirectional { mu, tau } => {
                finite("mu", mu)?;
                scale(tau)
            }
            AnalysisPriorSpec::PointPoint { mu } => {
                finite("mu", mu)?;
                if mu == 0.0 {
                    return Err(BfError::InvalidSpec(
                        "point alternative mu must be nonzero".to_string(),
                    ));
                }
                Ok(())
            }
            AnalysisPriorSpec::InformedT(t) => t.validate(),
        }
    }

    pub fn is_t_test(&self) -> bool {
        matches!(self, AnalysisPriorSpec::InformedT(_))
    }

    /// Short human-readable description of the alternative.
    pub fn describe(&self) -> String {
        match *self {
            AnalysisPriorSpec::DirectionalDirectional { mu, tau } => {
                format!(
                    "theta ~ N(mean = {}, sd = {}) split at 0",
                    short(mu),
                    short(tau)
                )
            }
            AnalysisPriorSpec::PointPoint { mu } => format!("theta = {}", short(mu)),
            AnalysisPriorSpec::PointTwoSided { mu, tau } => {
                format!("theta|H1 ~ N(mean = {}, sd = {})", short(mu), short(tau))
            }
            AnalysisPriorSpec::PointDirectional { mu, tau } => {
                format!("theta|H1 ~ N(mean = {}, sd = {})_+", short(mu), short(tau))
            }
            AnalysisPriorSpec::InformedT(t) => t.describe(),
        }
    }
}

/// At most four decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Posterior of `θ` under the normal prior `N(mu, tau²)` after observing `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMoments {
    pub mu_star: f64,
    pub tau_star: f64,
}

impl PosteriorMoments {
    pub fn new(obs: &ZObservation, mu: f64, tau: f64) -> Self {
        let tau_star2 = 1.0 / (1.0 / (obs.sigma * obs.sigma) + 1.0 / (tau * tau));
        Self {
            mu_star: (obs.z / obs.sigma + mu / (tau * tau)) * tau_star2,
            tau_star: tau_star2.sqrt(),
        }
    }
}

/// Two critical values `M ± √X` enclosing the centre `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedBoundary {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "X")]
    pub x: f64,
    pub z_minus: f64,
    pub z_plus: f64,
}

impl TwoSidedBoundary {
    pub fn new(m: f64, x: f64) -> Self {
        let r = x.sqrt();
        Self {
            m,
            x,
            z_minus: m - r,
            z_plus: m + r,
        }
    }

    pub(crate) fn from_roots(lo: f64, hi: f64) -> Self {
        let m = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        Self {
            m,
            x: h * h,
            z_minus: lo,
            z_plus: hi,
        }
    }
}

/// Statistic values at which `BF01 = k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriticalSet {
    Single {
        z_crit: f64,
    },
    Pair {
        boundary: TwoSidedBoundary,
    },
    /// The Bayes factor never reaches `k` on the searched range.
    Unattainable {
        reason: String,
    },
}

impl CriticalSet {
    /// Critical values in increasing order.
    pub fn roots(&self) -> Vec<f64> {
        match self {
            CriticalSet::Single { z_crit } => vec![*z_crit],
            CriticalSet::Pair { boundary } => vec![boundary.z_minus, boundary.z_plus],
            CriticalSet::Unattainable { .. } => Vec::new(),
        }
    }

    pub fn is_attainable(&self) -> bool {
        !matches!(self, CriticalSet::Unattainable { .. })
    }
}

pub(crate) fn check_threshold(k: f64) -> Result<f64, BfError> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(BfError::InvalidArgument(format!(
            "threshold k must be positive and finite, got {k}"
        )));
    }
    Ok(k.ln())
}
