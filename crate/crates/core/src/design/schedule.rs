use serde::{Deserialize, Serialize};

use super::DesignError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    OneSample,
    Paired,
    TwoSample,
}

/// Maps the per-arm sample size at an analysis to its information level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InformationModel {
    /// One-sample normal mean with unit variance `lambda2`: `I = n / λ²`.
    UnitVariance { lambda2: f64 },
    /// Two groups of `n` with unit variance, `σ = √(2/n)`.
    TwoSampleZ,
    /// Log odds ratio of two proportions with the delta-method standard error.
    TwoProportionsDelta { pi0: f64, pi1: f64 },
    /// Normal approximation of the t statistic, `t | θ ~ N(θ √n_eff, 1)`.
    TTestApprox { design: TTestKind },
}

impl InformationModel {
    pub fn validate(&self) -> Result<(), DesignError> {
        match *self {
            InformationModel::UnitVariance { lambda2 } => {
                if !(lambda2 > 0.0) || !lambda2.is_finite() {
                    return Err(DesignError::InvalidDesign(format!(
                        "lambda2 must be positive, got {lambda2}"
                    )));
                }
            }
            InformationModel::TwoProportionsDelta { pi0, pi1 } => {
                for (name, p) in [("pi0", pi0), ("pi1", pi1)] {
                    if !(p > 0.0 && p < 1.0) {
                        return Err(DesignError::InvalidDesign(format!(
                            "{name} must lie strictly inside (0, 1), got {p}"
                        )));
                    }
                }
            }
            InformationModel::TwoSampleZ | InformationModel::TTestApprox { .. } => {}
        }
        Ok(())
    }

    /// Number of reported arms.
    pub fn arms(&self) -> usize {
        match self {
            InformationModel::UnitVariance { .. } => 1,
            InformationModel::TTestApprox {
                design: TTestKind::OneSample | TTestKind::Paired,
            } => 1,
            _ => 2,
        }
    }

    /// Information level at per-arm sample size `n`.
    pub fn info(&self, n: f64) -> f64 {
        match *self {
            InformationModel::UnitVariance { lambda2 } => n / lambda2,
            InformationModel::TwoSampleZ => n / 2.0,
            InformationModel::TwoProportionsDelta { pi0, pi1 } => {
                1.0 / (1.0 / (n * pi0 * (1.0 - pi0)) + 1.0 / (n * pi1 * (1.0 - pi1)))
            }
            InformationModel::TTestApprox { .. } => self.n_eff(n),
        }
    }

    /// Effective sample size of the t-test; `n` itself for other models.
    pub fn n_eff(&self, n: f64) -> f64 {
        match self {
            InformationModel::TTestApprox {
                design: TTestKind::TwoSample,
            } => n / 2.0,
            _ => n,
        }
    }

    /// Degrees of freedom of the t statistic, for t-test models.
    pub fn df(&self, n: f64) -> Option<f64> {
        match self {
            InformationModel::TTestApprox { design } => Some(match design {
                TTestKind::TwoSample => 2.0 * n - 2.0,
                _ => n - 1.0,
            }),
            _ => None,
        }
    }

    pub fn is_t_test(&self) -> bool {
        matches!(self, InformationModel::TTestApprox { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Sample size per reported arm.
    pub n_report: Vec<f64>,
    pub info: f64,
    /// Degrees of freedom when the statistic is a t statistic.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df: Option<f64>,
}

/// Analyses with strictly increasing information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Stage>", into = "Vec<Stage>")]
pub struct Schedule {
    stages: Vec<Stage>,
}

impl TryFrom<Vec<Stage>> for Schedule {
    type Error = DesignError;

    fn try_from(stages: Vec<Stage>) -> Result<Self, DesignError> {
        Schedule::new(stages)
    }
}

impl From<Schedule> for Vec<Stage> {
    fn from(s: Schedule) -> Self {
        s.stages
    }
}

impl Schedule {
    pub fn new(stages: Vec<Stage>) -> Result<Self, DesignError> {
        if stages.is_empty() {
            return Err(DesignError::Schedule(
                "at least one analysis is required".into(),
            ));
        }
        let arms = stages[0].n_report.len();
        if !(1..=2).contains(&arms) {
            return Err(DesignError::Schedule(format!(
                "one or two arms are supported, got {arms}"
            )));
        }
        for (i, s) in stages.iter().enumerate() {
            if s.n_report.len() != arms {
                return Err(DesignError::Schedule(format!(
                    "analysis {} reports {} arms, expected {arms}",
                    i + 1,
                    s.n_report.len()
                )));
            }
            if !(s.info > 0.0) || !s.info.is_finite() {
                return Err(DesignError::Schedule(format!(
                    "analysis {}: information must be positive, got {}",
                    i + 1,
                    s.info
                )));
            }
            if let Some(df) = s.df {
                if !(df > 0.0) {
                    return Err(DesignError::Schedule(format!(
                        "analysis {}: degrees of freedom must be positive, got {df}",
                        i + 1
                    )));
                }
            }
        }
        for (i, w) in stages.windows(2).enumerate() {
            if !(w[1].info > w[0].info) {
                return Err(DesignError::Schedule(format!(
                    "information must increase strictly between analyses {} and {}",
                    i + 1,
                    i + 2
                )));
            }
            if w[1].n_report.iter().zip(&w[0].n_report).any(|(b, a)| b < a) {
                return Err(DesignError::Schedule(format!(
                    "sample sizes decrease between analyses {} and {}",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn arms(&self) -> usize {
        self.stages[0].n_report.len()
    }

    pub fn info(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.info).collect()
    }
}

/// Schedule for per-arm sample sizes `n_per_stage` under `model`.
pub fn build_schedule(
    model: &InformationModel,
    n_per_stage: &[f64],
) -> Result<Schedule, DesignError> {
    model.validate()?;
    if n_per_stage.is_empty() {
        return Err(DesignError::Schedule("sample size list is empty".into()));
    }
    for (i, &n) in n_per_stage.iter().enumerate() {
        if !(n > 0.0) || !n.is_finite() {
            return Err(DesignError::Schedule(format!(
                "analysis {}: sample size must be positive, got {n}",
                i + 1
            )));
        }
    }
    if let Some(i) = n_per_stage.windows(2).position(|w| w[1] <= w[0]) {
        return Err(DesignError::Schedule(format!(
            "sample sizes must increase strictly: {} then {}",
            n_per_stage[i],
            n_per_stage[i + 1]
        )));
    }
    let arms = model.arms();
    let stages = n_per_stage
        .iter()
        .map(|&n| {
            let df = model.df(n);
            if let Some(d) = df {
                if d <= 0.0 {
                    return Err(DesignError::Schedule(format!(
                        "n = {n} leaves no degrees of freedom for the t statistic"
                    )));
                }
            }
            Ok(Stage {
                n_report: vec![n; arms],
                info: model.info(n),
                df,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Schedule::new(stages)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_variance_info() {
        let s = build_schedule(
            &InformationModel::UnitVariance { lambda2: 1.0 },
            &[10.0, 20.0],
        )
        .unwrap();
        assert_eq!(s.info(), vec![10.0, 20.0]);
        assert_eq!(s.arms(), 1);
    }

    #[test]
    fn two_sample_z_info() {
        let s = build_schedule(&InformationModel::TwoSampleZ, &[25.0, 50.0]).unwrap();
        assert_eq!(s.info(), vec![12.5, 25.0]);
        assert_eq!(s.stages()[1].n_report, vec![50.0, 50.0]);
    }

    #[test]
    fn delta_method_info() {
        let model = InformationModel::TwoProportionsDelta {
            pi0: 0.5,
            pi1: 0.75,
        };
        let sigma = (1.0f64 / (50.0 * 0.25) + 1.0 / (50.0 * 0.75 * 0.25)).sqrt();
        let s = build_schedule(&model, &[50.0]).unwrap();
        assert!((s.info()[0] - 1.0 / (sigma * sigma)).abs() < 1e-12);
        assert!((s.info()[0] - 150.0 / 28.0).abs() < 1e-12);
    }

    #[test]
    fn t_test_degrees_of_freedom() {
        let two = InformationModel::TTestApprox {
            design: TTestKind::TwoSample,
        };
        let s = build_schedule(&two, &[20.0, 40.0]).unwrap();
        assert_eq!(s.info(), vec![10.0, 20.0]);
        assert_eq!(s.stages()[0].df, Some(38.0));
        let paired = InformationModel::TTestApprox {
            design: TTestKind::Paired,
        };
        let s = build_schedule(&paired, &[20.0]).unwrap();
        assert_eq!((s.info()[0], s.stages()[0].df), (20.0, Some(19.0)));
        assert!(build_schedule(&paired, &[1.0]).is_err());
    }

    #[test]
    fn rejects_non_increasing() {
        assert!(build_schedule(&InformationModel::TwoSampleZ, &[20.0, 20.0]).is_err());
        assert!(build_schedule(&InformationModel::TwoSampleZ, &[]).is_err());
        assert!(build_schedule(&InformationModel::TwoSampleZ, &[-1.0]).is_err());
    }

    #[test]
    fn schedule_serde_validates() {
        let s = build_schedule(&InformationModel::TwoSampleZ, &[10.0, 20.0]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: Schedule = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
        let bad = r#"[{"n_report":[2.0],"info":2.0},{"n_report":[1.0],"info":1.0}]"#;
        assert!(serde_json::from_str::<Schedule>(bad).is_err());
    }
}
