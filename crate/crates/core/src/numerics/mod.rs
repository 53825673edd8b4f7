//! Special functions, adaptive quadrature and bracketing root-finding.
//!
//! Everything here is pure and reentrant. The rest of the crate inherits its
//! accuracy from these routines, so each one states the error it guarantees.

mod quadrature;
mod roots;
mod special;

pub use quadrature::{integrate_1d, integrate_1d_with_points, try_integrate_1d_with_points};
pub use roots::{find_root, try_find_root};
pub(crate) use special::norm_quantile_fast;
pub use special::{log_norm_cdf, nct_pdf, norm_cdf, norm_pdf, norm_quantile, t_cdf, t_pdf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Accuracy request shared by the iterative algorithms of the crate.
///
/// How `max_iter` is spent depends on the consumer: panel subdivisions for
/// quadrature, iterations for root-finding, integrand evaluations for the
/// multivariate normal integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self, NumericsError> {
        if !(abs_tol > 0.0) || !abs_tol.is_finite() {
            return Err(NumericsError::InvalidTolerance(format!(
                "abs_tol must be positive and finite, got {abs_tol}"
            )));
        }
        if !(rel_tol >= 0.0) || !rel_tol.is_finite() {
            return Err(NumericsError::InvalidTolerance(format!(
                "rel_tol must be non-negative and finite, got {rel_tol}"
            )));
        }
        if max_iter == 0 {
            return Err(NumericsError::InvalidTolerance(
                "max_iter must be at least 1".to_string(),
            ));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }

    /// Default for one-dimensional quadrature.
    pub fn quadrature() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_iter: 500,
        }
    }

    /// Default for root-finding.
    pub fn root() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 0.0,
            max_iter: 200,
        }
    }

    /// Threshold the error estimate has to fall below for `value`.
    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// A numerical result together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err_est: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error(
        "quadrature did not converge: estimate {} with error {}",
        .best.value, .best.err_est
    )]
    QuadratureNonConvergence { best: Estimate },
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("root-finding did not converge; last bracket [{lo}, {hi}]")]
    RootNonConvergence { lo: f64, hi: f64 },
    #[error("function is not finite at x = {x}")]
    NonFiniteFunction { x: f64 },
}
