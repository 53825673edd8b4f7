//! JSON design configuration files.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayesfactor::AnalysisPriorSpec;
use crate::design::{
    build_schedule, equally_spaced, DesignError, DesignPrior, Hypothesis, InformationModel,
    SequentialDesign, Thresholds, DEFAULT_PAIR_CAP,
};
use crate::mvn::default_tolerance;
use crate::numerics::Tolerance;

/// A configuration problem, located in the source file where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.path, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.path, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Analyses given either as explicit per-arm sizes or as `m` equally spaced
/// looks up to `n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Number of reported arms; checked against the information model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<usize>,
}

impl ScheduleSpec {
    pub fn sizes(&self) -> Result<Vec<f64>, String> {
        match (&self.n, self.n_max, self.m) {
            (Some(n), None, None) => Ok(n.clone()),
            (None, Some(n_max), Some(m)) if m >= 1 => Ok(equally_spaced(n_max, m, true)),
            (None, Some(_), Some(_)) => Err("m must be at least 1".into()),
            _ => Err("give either `n` or both `n_max` and `m`".into()),
        }
    }
}

/// Multivariate normal integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSpec {
    pub abs: f64,
    #[serde(default)]
    pub rel: f64,
    pub max_evals: usize,
}

impl Default for TolerancesSpec {
    fn default() -> Self {
        let t = default_tolerance();
        Self {
            abs: t.abs_tol,
            rel: t.rel_tol,
            max_evals: t.max_iter,
        }
    }
}

impl TolerancesSpec {
    pub fn tolerance(&self) -> Result<Tolerance, String> {
        Tolerance::new(self.abs, self.rel, self.max_evals).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSizeSpec {
    pub target: f64,
    pub hypothesis: Hypothesis,
    pub n_lo: u64,
    pub n_hi: u64,
}

/// A design prior in a sweep, labelled with the hypothesis it represents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPrior {
    pub label: String,
    pub mu: f64,
    pub sd: f64,
    /// Hypothesis that counts as correct evidence under this prior.
    pub truth: Hypothesis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n_max: Vec<f64>,
    pub m: Vec<usize>,
    pub design_priors: Vec<SweepPrior>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub analysis_prior: AnalysisPriorSpec,
    pub thresholds: Thresholds,
    pub design_prior: DesignPrior,
    pub info_model: InformationModel,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub tolerances: TolerancesSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_pair_cap")]
    pub pair_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samplesize: Option<SampleSizeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
}

fn default_pair_cap() -> usize {
    DEFAULT_PAIR_CAP
}

/// Line of the first occurrence of `"key"` in `text`, 1-based.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&quoted))
        .map(|i| i + 1)
}

impl DesignConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: shown.clone(),
            line: None,
            column: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text, &shown)
    }

    /// Parses and validates a configuration. `origin` names the source in
    /// error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: DesignConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            path: origin.to_string(),
            line: Some(e.line()).filter(|&l| l > 0),
            column: Some(e.column()).filter(|&c| c > 0),
            message: e
                .to_string()
                .split(" at line ")
                .next()
                .unwrap_or_default()
                .to_string(),
        })?;
        cfg.validate().map_err(|(key, message)| ConfigError {
            path: origin.to_string(),
            line: key_line(text, key),
            column: None,
            message: format!("{key}: {message}"),
        })?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every section; errors name the offending key.
    fn validate(&self) -> Result<(), (&'static str, String)> {
        let s = |e: DesignError| e.to_string();
        self.thresholds.validate().map_err(|e| {
            let key = if self.thresholds.k0 > 1.0 { "k1" } else { "k0" };
            (key, s(e))
        })?;
        self.design_prior
            .validate()
            .map_err(|e| ("design_prior", s(e)))?;
        self.info_model
            .validate()
            .map_err(|e| ("info_model", s(e)))?;
        self.analysis_prior
            .validate()
            .map_err(|e| ("analysis_prior", e.to_string()))?;
        self.tolerances.tolerance().map_err(|e| ("tolerances", e))?;
        let sizes = self.schedule.sizes().map_err(|e| ("schedule", e))?;
        if let Some(arms) = self.schedule.arms {
            if arms != self.info_model.arms() {
                return Err((
                    "arms",
                    format!(
                        "schedule declares {arms} arms but the information model has {}",
                        self.info_model.arms()
                    ),
                ));
            }
        }
        build_schedule(&self.info_model, &sizes).map_err(|e| ("schedule", s(e)))?;
        self.design().map_err(|e| ("analysis_prior", s(e)))?;
        if let Some(ss) = &self.samplesize {
            if !(ss.target > 0.0 && ss.target < 1.0) {
                return Err(("target", format!("must lie in (0, 1), got {}", ss.target)));
            }
            if ss.n_lo == 0 || ss.n_hi <= ss.n_lo {
                return Err((
                    "samplesize",
                    format!("need 0 < n_lo < n_hi, got [{}, {}]", ss.n_lo, ss.n_hi),
                ));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.n_max.is_empty() || sw.m.is_empty() || sw.design_priors.is_empty() {
                return Err((
                    "sweep",
                    "n_max, m and design_priors must be non-empty".into(),
                ));
            }
            if sw.m.contains(&0) {
                return Err(("sweep", "every m must be at least 1".into()));
            }
            for p in &sw.design_priors {
                DesignPrior::new(p.mu, p.sd).map_err(|e| ("design_priors", s(e)))?;
            }
        }
        if let Some(sim) = &self.simulation {
            if sim.reps == 0 {
                return Err(("reps", "must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn design(&self) -> Result<SequentialDesign, DesignError> {
        let sizes = self.schedule.sizes().map_err(DesignError::Schedule)?;
        SequentialDesign::new(
            build_schedule(&self.info_model, &sizes)?,
            self.thresholds,
            self.analysis_prior,
            self.design_prior,
            self.info_model,
        )?
        .with_pair_cap(self.pair_cap)
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerances.tolerance().expect("validated tolerances")
    }
}
