use serde::{Deserialize, Serialize};

use crate::mvn::{sequential_exit_probs, MvnEstimate, StageIntervals};
use crate::numerics::Tolerance;

use super::{stage_boundaries, z_moments, DesignError, SequentialDesign, StageBoundary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub n_report: Vec<f64>,
    pub info: f64,
    /// Cumulative probability of having stopped for `H1` by this analysis.
    pub h1: MvnEstimate,
    /// Cumulative probability of having stopped for `H0` by this analysis.
    pub h0: MvnEstimate,
    /// Probability of still being undecided after this analysis.
    pub inconclusive: MvnEstimate,
    pub h1_stoppable: bool,
    pub h0_stoppable: bool,
}

/// Operating characteristics of a sequential design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub stages: Vec<StageReport>,
    /// Expected terminal sample size per arm.
    pub expected_n: Vec<f64>,
    pub sd_n: Vec<f64>,
    pub expected_n_total: f64,
    pub sd_n_total: f64,
    /// Coefficient of variation of the terminal sample size.
    pub cov_n: f64,
    /// Monte Carlo replications behind an empirical report.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub replications: Option<u64>,
    pub warnings: Vec<String>,
    pub converged: bool,
}

impl DesignReport {
    pub fn m(&self) -> usize {
        self.stages.len()
    }

    /// Final cumulative probability of stopping for `h`.
    pub fn final_probability(&self, h: super::Hypothesis) -> MvnEstimate {
        let last = self.stages.last().expect("non-empty report");
        match h {
            super::Hypothesis::H0 => last.h0,
            super::Hypothesis::H1 => last.h1,
        }
    }
}

/// Mean and standard deviation of the terminal sample size per arm and in
/// total, given the probability of ending at each analysis.
pub(crate) fn sample_size_moments(
    n_report: &[Vec<f64>],
    end_prob: &[f64],
) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let arms = n_report[0].len();
    let moments = |n: &dyn Fn(usize) -> f64| {
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for (j, p) in end_prob.iter().enumerate() {
            e1 += p * n(j);
            e2 += p * n(j) * n(j);
        }
        (e1, (e2 - e1 * e1).max(0.0).sqrt())
    };
    let mut mean = Vec::with_capacity(arms);
    let mut sd = Vec::with_capacity(arms);
    for a in 0..arms {
        let (e, s) = moments(&|j| n_report[j][a]);
        mean.push(e);
        sd.push(s);
    }
    let (e_total, sd_total) = moments(&|j| n_report[j].iter().sum());
    (mean, sd, e_total, sd_total)
}

/// `1-3, 5` style list of 1-based analysis numbers.
fn analysis_ranges(idx: &[usize]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && idx[j + 1] == idx[j] + 1 {
            j += 1;
        }
        parts.push(if j > i {
            format!("{}-{}", idx[i] + 1, idx[j] + 1)
        } else {
            (idx[i] + 1).to_string()
        });
        i = j + 1;
    }
    parts.join(", ")
}

pub(crate) fn design_warnings(
    design: &SequentialDesign,
    boundaries: &[StageBoundary],
) -> Vec<String> {
    let mut warnings = Vec::new();
    if design.info_model.is_t_test() {
        let stages = design.schedule.stages();
        let small: Vec<usize> = (0..stages.len())
            .filter(|&j| stages[j].info < 30.0)
            .collect();
        if let (Some(&first), Some(&last)) = (small.first(), small.last()) {
            let range = if first == last {
                format!("n_eff = {}", stages[first].info)
            } else {
                format!("n_eff from {} to {}", stages[first].info, stages[last].info)
            };
            warnings.push(format!(
                "normal approximation of the t statistic with n_eff < 30 at analyses {} ({range})",
                analysis_ranges(&small)
            ));
        }
    }
    let failing = |pred: &dyn Fn(&StageBoundary) -> bool| -> Vec<usize> {
        (0..boundaries.len())
            .filter(|&j| !pred(&boundaries[j]))
            .collect()
    };
    let no_h1 = failing(&|b| b.h1_stoppable());
    if !no_h1.is_empty() {
        warnings.push(format!(
            "BF01 <= k1 unattainable at analyses {}; no stopping for H1 there",
            analysis_ranges(&no_h1)
        ));
    }
    let no_h0 = failing(&|b| b.h0_stoppable());
    if !no_h0.is_empty() {
        warnings.push(format!(
            "BF01 >= k0 unattainable at analyses {}; no stopping for H0 there",
            analysis_ranges(&no_h0)
        ));
    }
    warnings
}

/// Stagewise stopping probabilities and sample size distribution of
/// `design`, by multivariate normal integration of the decision sets.
///
/// `tol` is the accuracy request for each probability (`max_iter` caps the
/// integrand evaluations); `seed` fixes the quasi-Monte Carlo shifts.
pub fn characteristics(
    design: &SequentialDesign,
    tol: &Tolerance,
    seed: u64,
) -> Result<DesignReport, DesignError> {
    let boundaries = stage_boundaries(design)?;
    let moments = z_moments(&design.schedule, &design.design_prior)?;
    let stages: Vec<StageIntervals> = boundaries
        .iter()
        .map(|b| StageIntervals {
            cont: b.cont.clone(),
            exits: vec![b.h1_set.clone(), b.h0_set.clone()],
        })
        .collect();
    let seq = sequential_exit_probs(&stages, &moments, tol, seed)?;
    let m = boundaries.len();

    let mut end_prob: Vec<f64> = (0..m.saturating_sub(1))
        .map(|j| seq.exit[j][0].value + seq.exit[j][1].value)
        .collect();
    end_prob.push(if m > 1 { seq.cont[m - 2].value } else { 1.0 });
    let n_report: Vec<Vec<f64>> = design
        .schedule
        .stages()
        .iter()
        .map(|s| s.n_report.clone())
        .collect();
    let (expected_n, sd_n, expected_n_total, sd_n_total) =
        sample_size_moments(&n_report, &end_prob);

    let mut warnings = design_warnings(design, &boundaries);
    if !seq.converged {
        let worst = seq
            .cumulative_exit
            .iter()
            .flatten()
            .chain(&seq.cont)
            .map(|e| e.err_est)
            .fold(0.0, f64::max);
        warnings.push(format!(
            "integration budget exhausted before the tolerance was met (largest error estimate {worst:.2e})"
        ));
    }
    let stages = (0..m)
        .map(|j| {
            let s = &design.schedule.stages()[j];
            StageReport {
                stage: j + 1,
                n_report: s.n_report.clone(),
                info: s.info,
                h1: seq.cumulative_exit[j][0],
                h0: seq.cumulative_exit[j][1],
                inconclusive: seq.cont[j],
                h1_stoppable: boundaries[j].h1_stoppable(),
                h0_stoppable: boundaries[j].h0_stoppable(),
            }
        })
        .collect();
    Ok(DesignReport {
        stages,
        expected_n,
        sd_n,
        expected_n_total,
        sd_n_total,
        cov_n: sd_n_total / expected_n_total,
        replications: None,
        warnings,
        converged: seq.converged,
    })
}
