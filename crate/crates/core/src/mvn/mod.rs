//! Multivariate normal probabilities of hyper-rectangles.
//!
//! The integrator is Genz's separation-of-variables transform: the
//! covariance is Cholesky-factored, each coordinate is sampled from its
//! conditional truncated normal, and the product of conditional masses is
//! averaged over randomly shifted quasi-Monte Carlo points. The spread
//! between independent shifts gives a reproducible error estimate.

mod genz;
mod qmc;
mod sequential;

pub use genz::{mvn_prob, mvn_prob_union};
pub use sequential::{sequential_exit_probs, SequentialEstimate, StageIntervals};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{NumericsError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MvnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("covariance matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Default accuracy for rectangle probabilities: 5e-5 absolute, at most
/// four million integrand evaluations.
pub fn default_tolerance() -> Tolerance {
    Tolerance {
        abs_tol: 5e-5,
        rel_tol: 0.0,
        max_iter: 4_000_000,
    }
}

/// An interval `(lo, hi)` of the extended real line. Endpoints carry no
/// probability under a normal law, so openness is immaterial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, MvnError> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(MvnError::InvalidRectangle(format!(
                "interval requires lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn is_real_line(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRectangle {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl HyperRectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, MvnError> {
        if lower.len() != upper.len() {
            return Err(MvnError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(MvnError::InvalidRectangle(
                "zero-dimensional rectangle".into(),
            ));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l >= u {
                return Err(MvnError::InvalidRectangle(format!(
                    "coordinate {i}: lower {l} must be below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn from_intervals(intervals: &[Interval]) -> Result<Self, MvnError> {
        Self::new(
            intervals.iter().map(|i| i.lo).collect(),
            intervals.iter().map(|i| i.hi).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval {
            lo: self.lower[i],
            hi: self.upper[i],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|i| self.interval(i).contains(x[i]))
    }
}

/// Mean vector and positive definite covariance of a multivariate normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvnMoments {
    mean: Vec<f64>,
    /// Row-major `dim × dim`.
    cov: Vec<f64>,
}

impl MvnMoments {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self, MvnError> {
        let d = mean.len();
        if cov.len() != d {
            return Err(MvnError::DimensionMismatch {
                expected: d,
                got: cov.len(),
            });
        }
        let mut flat = Vec::with_capacity(d * d);
        for row in &cov {
            if row.len() != d {
                return Err(MvnError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (flat[i * d + j], flat[j * d + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(MvnError::NotSymmetric { row: i, col: j });
                }
            }
        }
        let m = Self { mean, cov: flat };
        m.cholesky()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim() + j]
    }

    pub fn cov_rows(&self) -> Vec<Vec<f64>> {
        self.cov.chunks(self.dim()).map(|r| r.to_vec()).collect()
    }

    /// Marginal law of the first `k` coordinates.
    pub fn leading(&self, k: usize) -> MvnMoments {
        let d = self.dim();
        let k = k.min(d);
        let mut cov = Vec::with_capacity(k * k);
        for i in 0..k {
            cov.extend_from_slice(&self.cov[i * d..i * d + k]);
        }
        MvnMoments {
            mean: self.mean[..k].to_vec(),
            cov,
        }
    }

    /// Lower-triangular factor, row-major.
    pub fn cholesky(&self) -> Result<Vec<f64>, MvnError> {
        cholesky(&self.cov, self.dim())
    }
}

pub(crate) fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>, MvnError> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if !(diag > 1e-14 * a[j * d + j].abs()) || !diag.is_finite() {
            return Err(MvnError::NotPositiveDefinite {
                index: j,
                pivot: diag,
            });
        }
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    Ok(l)
}

/// Probability estimate with its three-sigma error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvnEstimate {
    pub value: f64,
    pub err_est: f64,
    /// False when the evaluation budget ran out before the tolerance was met.
    pub converged: bool,
}

impl MvnEstimate {
    pub(crate) fn exact(value: f64) -> Self {
        Self {
            value,
            err_est: 0.0,
            converged: true,
        }
    }

    /// One standard error, a third of `err_est`.
    pub fn standard_error(&self) -> f64 {
        self.err_est / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_pd() {
        let r = MvnMoments::new(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(r, Err(MvnError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn rejects_asymmetric() {
        let r = MvnMoments::new(vec![0.0, 0.0], vec![vec![1.0, 0.2], vec![0.3, 1.0]]);
        assert!(matches!(r, Err(MvnError::NotSymmetric { .. })));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let r = MvnMoments::new(vec![0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(r, Err(MvnError::DimensionMismatch { .. })));
        assert!(HyperRectangle::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn rectangle_bounds_validated() {
        assert!(HyperRectangle::new(vec![1.0], vec![1.0]).is_err());
        assert!(HyperRectangle::new(vec![f64::NEG_INFINITY], vec![f64::INFINITY]).is_ok());
    }

    #[test]
    fn leading_block() {
        let m = MvnMoments::new(
            vec![1.0, 2.0, 3.0],
            vec![
                vec![2.0, 0.5, 0.1],
                vec![0.5, 1.0, 0.2],
                vec![0.1, 0.2, 1.5],
            ],
        )
        .unwrap();
        let l = m.leading(2);
        assert_eq!(l.mean(), &[1.0, 2.0]);
        assert_eq!(l.cov_rows(), vec![vec![2.0, 0.5], vec![0.5, 1.0]]);
    }
}
