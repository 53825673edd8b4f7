//! Monte Carlo replay of sequential trials on the score scale.
//!
//! Each replication draws `θ` from the design prior, accumulates independent
//! score increments `S_j − S_{j−1} ~ N(θ ΔI, ΔI)` and applies the stopping
//! rule to `z_j = S_j / √I_j`. Replication `r` uses its own ChaCha stream
//! keyed by `(seed, r)`, so results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayesfactor::BfError;
use crate::design::{
    design_warnings, sample_size_moments, stage_boundaries, stage_log_bf, z_moments, DesignError,
    DesignPrior, DesignReport, Hypothesis, Schedule, SequentialDesign, StageBoundary, StageReport,
};
use crate::mvn::MvnEstimate;

const BLOCK: u64 = 4096;

/// How a simulated z-value is turned into a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Compare against the precomputed critical values.
    #[default]
    CriticalValues,
    /// Evaluate the Bayes factor itself at every analysis.
    BayesFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_replications: u64,
    pub seed: u64,
    #[serde(default)]
    pub rule: DecisionRule,
}

impl SimConfig {
    pub fn new(n_replications: u64, seed: u64) -> Result<Self, DesignError> {
        let cfg = Self {
            n_replications,
            seed,
            rule: DecisionRule::CriticalValues,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rule(mut self, rule: DecisionRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if self.n_replications == 0 {
            return Err(DesignError::InvalidDesign(
                "number of replications must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// One simulated z-path under the design prior.
fn z_path(rng: &mut ChaCha8Rng, info: &[f64], prior: &DesignPrior, out: &mut Vec<f64>) {
    out.clear();
    let u: f64 = StandardNormal.sample(rng);
    let theta = prior.mu_d + prior.tau_d * u;
    let mut score = 0.0;
    let mut prev = 0.0;
    for &i in info {
        let di = i - prev;
        let e: f64 = StandardNormal.sample(rng);
        score += theta * di + di.sqrt() * e;
        out.push(score / i.sqrt());
        prev = i;
    }
}

/// Stop counts per analysis: `[H1, H0]`, plus paths still open at the end.
#[derive(Debug, Clone, PartialEq)]
struct Tally {
    stops: Vec<[u64; 2]>,
    open: u64,
}

impl Tally {
    fn new(m: usize) -> Self {
        Self {
            stops: vec![[0; 2]; m],
            open: 0,
        }
    }

    fn merge(mut self, other: &Tally) -> Self {
        for (a, b) in self.stops.iter_mut().zip(&other.stops) {
            a[0] += b[0];
            a[1] += b[1];
        }
        self.open += other.open;
        self
    }
}

fn blocks(reps: u64) -> Vec<(u64, u64)> {
    (0..reps.div_ceil(BLOCK))
        .map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(reps)))
        .collect()
}

fn run_tally<F>(design: &SequentialDesign, cfg: &SimConfig, decide: F) -> Result<Tally, DesignError>
where
    F: Fn(usize, f64) -> Result<Option<Hypothesis>, BfError> + Sync,
{
    let info = design.schedule.info();
    let m = info.len();
    let prior = design.design_prior;
    let partial: Vec<Result<Tally, DesignError>> = blocks(cfg.n_replications)
        .into_par_iter()
        .map(|(start, end)| {
            let mut tally = Tally::new(m);
            let mut z = Vec::with_capacity(m);
            for rep in start..end {
                let mut rng = replication_rng(cfg.seed, rep);
                z_path(&mut rng, &info, &prior, &mut z);
                let mut decided = false;
                for (j, &zj) in z.iter().enumerate() {
                    match decide(j, zj)? {
                        Some(Hypothesis::H1) => tally.stops[j][0] += 1,
                        Some(Hypothesis::H0) => tally.stops[j][1] += 1,
                        None => continue,
                    }
                    decided = true;
                    break;
                }
                if !decided {
                    tally.open += 1;
                }
            }
            Ok(tally)
        })
        .collect();
    let mut total = Tally::new(m);
    for t in partial {
        total = total.merge(&t?);
    }
    Ok(total)
}

fn proportion(count: u64, reps: u64) -> MvnEstimate {
    let p = count as f64 / reps as f64;
    MvnEstimate {
        value: p,
        err_est: 3.0 * (p * (1.0 - p) / reps as f64).sqrt(),
        converged: true,
    }
}

/// Empirical operating characteristics of `design`.
///
/// The report has the same layout as the analytic one; each `err_est` is
/// three binomial standard errors.
pub fn simulate(design: &SequentialDesign, cfg: &SimConfig) -> Result<DesignReport, DesignError> {
    cfg.validate()?;
    let boundaries = stage_boundaries(design)?;
    let tally = match cfg.rule {
        DecisionRule::CriticalValues => {
            run_tally(design, cfg, |j, z| Ok(boundaries[j].classify(z)))?
        }
        DecisionRule::BayesFactor => {
            let log_bf: Vec<_> = design
                .schedule
                .stages()
                .iter()
                .map(|s| stage_log_bf(&design.analysis_prior, s))
                .collect();
            let (lk0, lk1) = (design.thresholds.k0.ln(), design.thresholds.k1.ln());
            run_tally(design, cfg, |j, z| {
                let v = log_bf[j](z)?;
                Ok(if v <= lk1 {
                    Some(Hypothesis::H1)
                } else if v >= lk0 {
                    Some(Hypothesis::H0)
                } else {
                    None
                })
            })?
        }
    };
    Ok(tally_report(
        design,
        &boundaries,
        &tally,
        cfg.n_replications,
    ))
}

fn tally_report(
    design: &SequentialDesign,
    boundaries: &[StageBoundary],
    tally: &Tally,
    reps: u64,
) -> DesignReport {
    let m = tally.stops.len();
    let mut cum = [0u64; 2];
    let mut stages = Vec::with_capacity(m);
    let mut end_prob = Vec::with_capacity(m);
    for (j, s) in design.schedule.stages().iter().enumerate() {
        cum[0] += tally.stops[j][0];
        cum[1] += tally.stops[j][1];
        let mut ended = tally.stops[j][0] + tally.stops[j][1];
        if j + 1 == m {
            ended += tally.open;
        }
        end_prob.push(ended as f64 / reps as f64);
        stages.push(StageReport {
            stage: j + 1,
            n_report: s.n_report.clone(),
            info: s.info,
            h1: proportion(cum[0], reps),
            h0: proportion(cum[1], reps),
            inconclusive: proportion(reps - cum[0] - cum[1], reps),
            h1_stoppable: boundaries[j].h1_stoppable(),
            h0_stoppable: boundaries[j].h0_stoppable(),
        });
    }
    let n_report: Vec<Vec<f64>> = design
        .schedule
        .stages()
        .iter()
        .map(|s| s.n_report.clone())
        .collect();
    let (expected_n, sd_n, expected_n_total, sd_n_total) =
        sample_size_moments(&n_report, &end_prob);
    DesignReport {
        stages,
        expected_n,
        sd_n,
        expected_n_total,
        sd_n_total,
        cov_n: sd_n_total / expected_n_total,
        replications: Some(reps),
        warnings: design_warnings(design, boundaries),
        converged: true,
    }
}

/// One compared moment of the z-vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub i: usize,
    /// `None` for a mean, `Some(j)` for the covariance of `z_i` and `z_j`.
    pub j: Option<usize>,
    pub expected: f64,
    pub empirical: f64,
    /// Standard error of the empirical moment.
    pub se: f64,
}

impl MomentEntry {
    pub fn deviation(&self) -> f64 {
        (self.empirical - self.expected).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub entries: Vec<MomentEntry>,
    pub max_abs_deviation: f64,
    /// Largest deviation in units of its standard error.
    pub max_standardized: f64,
}

/// Compares sampled z-vectors with the mean `μ_d √I` and covariance
/// `Σ + τ_d² √I √Iᵀ` of the marginal law.
pub fn empirical_cov_check(
    schedule: &Schedule,
    prior: &DesignPrior,
    cfg: &SimConfig,
) -> Result<MomentCheck, DesignError> {
    cfg.validate()?;
    let moments = z_moments(schedule, prior)?;
    let info = schedule.info();
    let m = info.len();
    let reps = cfg.n_replications;
    let partial: Vec<(Vec<f64>, Vec<f64>)> = blocks(reps)
        .into_par_iter()
        .map(|(start, end)| {
            let mut sum = vec![0.0; m];
            let mut cross = vec![0.0; m * m];
            let mut z = Vec::with_capacity(m);
            for rep in start..end {
                let mut rng = replication_rng(cfg.seed, rep);
                z_path(&mut rng, &info, prior, &mut z);
                // Centre on the known mean to keep the sums well conditioned.
                for i in 0..m {
                    let di = z[i] - moments.mean()[i];
                    sum[i] += di;
                    for j in 0..=i {
                        cross[i * m + j] += di * (z[j] - moments.mean()[j]);
                    }
                }
            }
            (sum, cross)
        })
        .collect();
    let mut sum = vec![0.0; m];
    let mut cross = vec![0.0; m * m];
    for (s, c) in partial {
        sum.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        cross.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
    }
    let r = reps as f64;
    let mut entries = Vec::with_capacity(m + m * (m + 1) / 2);
    for i in 0..m {
        entries.push(MomentEntry {
            i,
            j: None,
            expected: moments.mean()[i],
            empirical: moments.mean()[i] + sum[i] / r,
            se: (moments.cov(i, i) / r).sqrt(),
        });
    }
    let denom = if reps > 1 { r - 1.0 } else { 1.0 };
    for i in 0..m {
        for j in 0..=i {
            let c = (cross[i * m + j] - sum[i] * sum[j] / r) / denom;
            let sij = moments.cov(i, j);
            entries.push(MomentEntry {
                i,
                j: Some(j),
                expected: sij,
                empirical: c,
                se: ((sij * sij + moments.cov(i, i) * moments.cov(j, j)) / r).sqrt(),
            });
        }
    }
    let max_abs_deviation = entries.iter().map(|e| e.deviation()).fold(0.0, f64::max);
    let max_standardized = entries
        .iter()
        .map(|e| e.deviation() / e.se)
        .fold(0.0, f64::max);
    Ok(MomentCheck {
        entries,
        max_abs_deviation,
        max_standardized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesfactor::{critical_z, AnalysisPriorSpec};
    use crate::design::{build_schedule, characteristics, InformationModel, Thresholds};
    use crate::mvn::default_tolerance;
    use crate::numerics::norm_cdf;

    fn z_design(spec: AnalysisPriorSpec, n: &[f64], prior: DesignPrior) -> SequentialDesign {
        let model = InformationModel::UnitVariance { lambda2: 1.0 };
        SequentialDesign::new(
            build_schedule(&model, n).unwrap(),
            Thresholds::new(10.0, 0.1).unwrap(),
            spec,
            prior,
            model,
        )
        .unwrap()
    }

    fn within(a: &MvnEstimate, b: &MvnEstimate) -> bool {
        (a.value - b.value).abs() <= (a.err_est.powi(2) + b.err_est.powi(2)).sqrt() + 1e-12
    }

    #[test]
    fn single_stage_matches_tail() {
        let spec = AnalysisPriorSpec::PointPoint { mu: 0.5 };
        let d = z_design(spec, &[20.0], DesignPrior::point(0.3));
        let r = simulate(&d, &SimConfig::new(100_000, 11).unwrap()).unwrap();
        let crit = critical_z(0.1, 1.0 / 20f64.sqrt(), &spec).unwrap().roots()[0];
        let exact = norm_cdf(0.3 * 20f64.sqrt() - crit);
        assert!((r.stages[0].h1.value - exact).abs() <= r.stages[0].h1.err_est);
    }

    #[test]
    fn agrees_with_analytic_and_direct_rule() {
        let spec = AnalysisPriorSpec::PointTwoSided { mu: 0.0, tau: 0.5 };
        let d = z_design(
            spec,
            &[10.0, 20.0, 40.0, 80.0],
            DesignPrior::new(0.2, 0.1).unwrap(),
        );
        let analytic = characteristics(&d, &default_tolerance(), 2).unwrap();
        let cfg = SimConfig::new(50_000, 4).unwrap();
        let crit = simulate(&d, &cfg).unwrap();
        let direct = simulate(&d, &cfg.with_rule(DecisionRule::BayesFactor)).unwrap();
        for j in 0..4 {
            assert!(within(&analytic.stages[j].h1, &crit.stages[j].h1));
            assert!(within(&analytic.stages[j].h0, &crit.stages[j].h0));
            // Same draws, so the two rules should agree exactly up to ties.
            assert_eq!(crit.stages[j].h1.value, direct.stages[j].h1.value);
            assert_eq!(crit.stages[j].h0.value, direct.stages[j].h0.value);
        }
    }

    #[test]
    fn histogram_consistency_and_determinism() {
        let spec = AnalysisPriorSpec::DirectionalDirectional { mu: 0.0, tau: 1.0 };
        let d = z_design(
            spec,
            &[5.0, 10.0, 15.0],
            DesignPrior::new(0.3, 0.2).unwrap(),
        );
        let cfg = SimConfig::new(10_001, 9).unwrap();
        let a = simulate(&d, &cfg).unwrap();
        let b = simulate(&d, &cfg).unwrap();
        assert_eq!(a, b);
        let last = a.stages.last().unwrap();
        assert!((last.h1.value + last.h0.value + last.inconclusive.value - 1.0).abs() < 1e-12);
        let p1 = a.stages[0].h1.value + a.stages[0].h0.value;
        let p2 = a.stages[1].h1.value + a.stages[1].h0.value - p1;
        let e = 5.0 * p1 + 10.0 * p2 + 15.0 * (1.0 - p1 - p2);
        assert!((a.expected_n[0] - e).abs() < 1e-9);
    }

    #[test]
    fn zero_replications_rejected() {
        assert!(SimConfig::new(0, 1).is_err());
    }

    #[test]
    fn moments_match_marginal_law() {
        let s = build_schedule(
            &InformationModel::UnitVariance { lambda2: 1.0 },
            &[10.0, 20.0, 30.0],
        )
        .unwrap();
        let c = empirical_cov_check(
            &s,
            &DesignPrior::new(0.5, 0.1).unwrap(),
            &SimConfig::new(100_000, 3).unwrap(),
        )
        .unwrap();
        assert_eq!(c.entries.len(), 3 + 6);
        assert!(c.max_standardized < 3.0, "{c:?}");
        let one =
            build_schedule(&InformationModel::UnitVariance { lambda2: 1.0 }, &[10.0]).unwrap();
        let c = empirical_cov_check(
            &one,
            &DesignPrior::new(0.0, 0.2).unwrap(),
            &SimConfig::new(100_000, 3).unwrap(),
        )
        .unwrap();
        assert!((c.entries[1].expected - 1.4).abs() < 1e-12);
        assert!(c.entries[1].deviation() < 3.0 * c.entries[1].se);
    }
}
