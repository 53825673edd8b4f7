//! Sequential Bayes factor designs.
//!
//! A design fixes the analyses (sample sizes and information levels), the
//! Bayes factor thresholds, the prior inside the Bayes factor and a normal
//! design prior for the true effect. Each analysis translates the
//! thresholds into intervals of the z-statistic, and the vector of
//! z-statistics is jointly normal under the design prior, so every operating
//! characteristic is a multivariate normal probability.

mod regions;
mod report;
mod samplesize;
mod schedule;

pub(crate) use regions::stage_log_bf;
pub use regions::{
    stage_boundaries, stopping_regions, StageBoundary, StageRegions, StoppingRegions,
};
pub use report::{characteristics, DesignReport, StageReport};
pub(crate) use report::{design_warnings, sample_size_moments};
pub use samplesize::{equally_spaced, find_max_n, SampleSizeResult};
pub use schedule::{build_schedule, InformationModel, Schedule, Stage, TTestKind};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayesfactor::{AnalysisPriorSpec, BfError};
use crate::mvn::{MvnError, MvnMoments};
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("{m} analyses exceed the cap of {cap} for two-sided critical values; use fewer analyses or raise pair_cap")]
    TooManyAnalyses { m: usize, cap: usize },
    #[error("target {target} not reached by n = {n_hi} (probability {achieved:.4})")]
    Unreachable {
        target: f64,
        n_hi: u64,
        achieved: f64,
    },
    #[error(transparent)]
    BayesFactor(#[from] BfError),
    #[error(transparent)]
    Mvn(#[from] MvnError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Stop for `H0` when `BF01 ≥ k0`, for `H1` when `BF01 ≤ k1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub k0: f64,
    pub k1: f64,
}

impl Thresholds {
    pub fn new(k0: f64, k1: f64) -> Result<Self, DesignError> {
        let t = Self { k0, k1 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.k0 > 1.0) || !self.k0.is_finite() {
            return Err(DesignError::InvalidDesign(format!(
                "k0 must exceed 1, got {}",
                self.k0
            )));
        }
        if !(self.k1 > 0.0 && self.k1 < 1.0) {
            return Err(DesignError::InvalidDesign(format!(
                "k1 must lie in (0, 1), got {}",
                self.k1
            )));
        }
        Ok(())
    }
}

/// Normal design prior `θ ~ N(mu_d, tau_d²)`; `tau_d = 0` fixes `θ = mu_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignPrior {
    #[serde(rename = "mu")]
    pub mu_d: f64,
    #[serde(rename = "sd")]
    pub tau_d: f64,
}

impl DesignPrior {
    pub fn new(mu_d: f64, tau_d: f64) -> Result<Self, DesignError> {
        let p = Self { mu_d, tau_d };
        p.validate()?;
        Ok(p)
    }

    pub fn point(theta: f64) -> Self {
        Self {
            mu_d: theta,
            tau_d: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !self.mu_d.is_finite() {
            return Err(DesignError::InvalidDesign(format!(
                "design prior mean must be finite, got {}",
                self.mu_d
            )));
        }
        if !(self.tau_d >= 0.0) || !self.tau_d.is_finite() {
            return Err(DesignError::InvalidDesign(format!(
                "design prior sd must be non-negative, got {}",
                self.tau_d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    H0,
    H1,
}

pub const DEFAULT_PAIR_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialDesign {
    pub schedule: Schedule,
    pub thresholds: Thresholds,
    pub analysis_prior: AnalysisPriorSpec,
    pub design_prior: DesignPrior,
    pub info_model: InformationModel,
    /// Largest number of analyses accepted for two-sided critical values.
    pub pair_cap: usize,
}

impl SequentialDesign {
    pub fn new(
        schedule: Schedule,
        thresholds: Thresholds,
        analysis_prior: AnalysisPriorSpec,
        design_prior: DesignPrior,
        info_model: InformationModel,
    ) -> Result<Self, DesignError> {
        let d = Self {
            schedule,
            thresholds,
            analysis_prior,
            design_prior,
            info_model,
            pair_cap: DEFAULT_PAIR_CAP,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_pair_cap(mut self, cap: usize) -> Result<Self, DesignError> {
        self.pair_cap = cap;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        self.thresholds.validate()?;
        self.design_prior.validate()?;
        self.info_model.validate()?;
        self.analysis_prior.validate()?;
        if self.analysis_prior.is_t_test() != self.info_model.is_t_test() {
            return Err(DesignError::InvalidDesign(
                "the informed t prior requires the t_test_approx information model and vice versa"
                    .into(),
            ));
        }
        if self.schedule.arms() != self.info_model.arms() {
            return Err(DesignError::InvalidDesign(format!(
                "schedule reports {} arms but the information model has {}",
                self.schedule.arms(),
                self.info_model.arms()
            )));
        }
        if self.info_model.is_t_test() && self.schedule.stages().iter().any(|s| s.df.is_none()) {
            return Err(DesignError::InvalidDesign(
                "t-test schedules need degrees of freedom at every analysis".into(),
            ));
        }
        let m = self.schedule.len();
        if self.has_two_sided_boundaries() && m > self.pair_cap {
            return Err(DesignError::TooManyAnalyses {
                m,
                cap: self.pair_cap,
            });
        }
        Ok(())
    }

    /// Whether the analysis prior yields two critical values per threshold,
    /// splitting the continuation region.
    pub fn has_two_sided_boundaries(&self) -> bool {
        match self.analysis_prior {
            AnalysisPriorSpec::PointTwoSided { .. } => true,
            AnalysisPriorSpec::InformedT(t) => !(t.a >= 0.0 || t.b <= 0.0),
            _ => false,
        }
    }

    /// Same design with the analyses at new per-arm sample sizes.
    pub fn rescheduled(&self, n_per_stage: &[f64]) -> Result<Self, DesignError> {
        let mut d = self.clone();
        d.schedule = build_schedule(&self.info_model, n_per_stage)?;
        d.validate()?;
        Ok(d)
    }

    pub fn with_design_prior(&self, prior: DesignPrior) -> Result<Self, DesignError> {
        let mut d = self.clone();
        d.design_prior = prior;
        d.validate()?;
        Ok(d)
    }

    pub fn m(&self) -> usize {
        self.schedule.len()
    }
}

/// Joint law of the z-statistics: mean `μ_d √I`, covariance
/// `√(I_i/I_j) + τ_d² √(I_i I_j)` for `i ≤ j`.
pub fn z_moments(schedule: &Schedule, prior: &DesignPrior) -> Result<MvnMoments, DesignError> {
    prior.validate()?;
    let info = schedule.info();
    let root: Vec<f64> = info.iter().map(|i| i.sqrt()).collect();
    let mean = root.iter().map(|r| prior.mu_d * r).collect();
    let t2 = prior.tau_d * prior.tau_d;
    let m = info.len();
    let cov = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let (lo, hi) = if info[i] <= info[j] { (i, j) } else { (j, i) };
                    (info[lo] / info[hi]).sqrt() + t2 * root[i] * root[j]
                })
                .collect()
        })
        .collect();
    Ok(MvnMoments::new(mean, cov)?)
}
