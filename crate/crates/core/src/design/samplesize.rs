use serde::{Deserialize, Serialize};

use crate::mvn::MvnEstimate;
use crate::numerics::{try_find_root, Tolerance};

use super::{characteristics, DesignError, DesignReport, Hypothesis, SequentialDesign};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeResult {
    /// Smallest per-arm sample size at the final analysis meeting the target.
    pub n_max: u64,
    pub n_per_stage: Vec<f64>,
    pub hypothesis: Hypothesis,
    pub target: f64,
    /// Probability of stopping for `hypothesis` by the final analysis at `n_max`.
    pub probability: MvnEstimate,
    /// Root of the probability curve with continuous stage sizes.
    pub continuous_root: f64,
    pub report: DesignReport,
}

/// Per-arm sizes of `m` equally spaced analyses ending at `n_max`; integer
/// schedules round each analysis and keep the sizes strictly increasing.
pub fn equally_spaced(n_max: f64, m: usize, integer: bool) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(m);
    for j in 1..=m {
        let x = n_max * j as f64 / m as f64;
        let x = if integer { x.round().max(1.0) } else { x };
        let x = match out.last() {
            Some(&prev) if integer && x <= prev => prev + 1.0,
            _ => x,
        };
        out.push(x);
    }
    out
}

fn probability(
    template: &SequentialDesign,
    n_max: f64,
    integer: bool,
    tol: &Tolerance,
    seed: u64,
) -> Result<(DesignReport, Vec<f64>), DesignError> {
    let n = equally_spaced(n_max, template.m(), integer);
    let design = template.rescheduled(&n)?;
    let report = characteristics(&design, tol, seed)?;
    Ok((report, n))
}

/// Smallest maximal per-arm sample size `n` such that a design with the
/// analyses of `template` spread evenly over `(0, n]` stops for `hypothesis`
/// by its last analysis with probability at least `target`.
///
/// The design prior of `template` is the one averaged over, so a search
/// under `H0` needs a template whose design prior sits on the null. The
/// search brackets on `[n_lo, n_hi]`, solves on continuous stage sizes and
/// then settles the integer answer on rounded schedules. Every evaluation
/// reuses `seed`, so the estimated curve is a deterministic function of `n`.
pub fn find_max_n(
    template: &SequentialDesign,
    target: f64,
    hypothesis: Hypothesis,
    (n_lo, n_hi): (u64, u64),
    tol: &Tolerance,
    seed: u64,
) -> Result<SampleSizeResult, DesignError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(DesignError::InvalidDesign(format!(
            "target probability must lie in (0, 1), got {target}"
        )));
    }
    if n_lo == 0 || n_hi <= n_lo {
        return Err(DesignError::InvalidDesign(format!(
            "sample size bracket must satisfy 0 < n_lo < n_hi, got [{n_lo}, {n_hi}]"
        )));
    }
    let eval = |n: f64, integer: bool| probability(template, n, integer, tol, seed);
    let p = |r: &DesignReport| r.final_probability(hypothesis).value;

    let (hi_report, _) = eval(n_hi as f64, true)?;
    if p(&hi_report) < target {
        return Err(DesignError::Unreachable {
            target,
            n_hi,
            achieved: p(&hi_report),
        });
    }
    let finish = |n: u64, root: f64| -> Result<SampleSizeResult, DesignError> {
        let (report, n_per_stage) = eval(n as f64, true)?;
        Ok(SampleSizeResult {
            n_max: n,
            n_per_stage,
            hypothesis,
            target,
            probability: report.final_probability(hypothesis),
            continuous_root: root,
            report,
        })
    };
    let (lo_report, _) = eval(n_lo as f64, true)?;
    if p(&lo_report) >= target {
        return finish(n_lo, n_lo as f64);
    }

    let root_tol = Tolerance {
        abs_tol: 1e-3,
        rel_tol: 0.0,
        max_iter: 200,
    };
    let root = try_find_root(
        |n| eval(n, false).map(|(r, _)| p(&r) - target),
        n_lo as f64,
        n_hi as f64,
        &root_tol,
    )?;

    let meets = |n: u64| eval(n as f64, true).map(|(r, _)| p(&r) >= target);
    let mut n = (root.ceil() as u64).clamp(n_lo + 1, n_hi);
    while n > n_lo + 1 && meets(n - 1)? {
        n -= 1;
    }
    while !meets(n)? {
        n += 1;
        if n > n_hi {
            return Err(DesignError::Unreachable {
                target,
                n_hi,
                achieved: p(&hi_report),
            });
        }
    }
    finish(n, root)
}
