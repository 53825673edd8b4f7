//! Exit probabilities of a sequential procedure in a single integration pass.
//!
//! Stage `i` stops with outcome `o` when the path stayed in the continuation
//! sets of stages `1..i` and lands in `exits[i][o]`. Every such event is a
//! union of rectangles sharing the same prefix, so one Genz walk along the
//! stages yields all of them: at each stage the exit masses are banked and
//! the walk continues inside each continuation interval.

use serde::{Deserialize, Serialize};

use crate::numerics::Tolerance;

use super::genz::{std_mass, truncated_draw};
use super::qmc::{self, summarize};
use super::{Interval, MvnError, MvnEstimate, MvnMoments};

/// Continuation and exit sets of one stage, as disjoint interval unions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageIntervals {
    pub cont: Vec<Interval>,
    /// One interval union per outcome.
    pub exits: Vec<Vec<Interval>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialEstimate {
    /// `exit[i][o]`: probability of stopping at stage `i` with outcome `o`.
    pub exit: Vec<Vec<MvnEstimate>>,
    /// Running sums of `exit` over stages, with errors taken across
    /// randomisations of the sum itself.
    pub cumulative_exit: Vec<Vec<MvnEstimate>>,
    /// Probability of still continuing after stage `i`.
    pub cont: Vec<MvnEstimate>,
    pub converged: bool,
}

struct Walk<'a> {
    stages: &'a [StageIntervals],
    mean: Vec<f64>,
    chol: Vec<f64>,
    m: usize,
    outcomes: usize,
}

impl Walk<'_> {
    fn slot(&self, stage: usize) -> usize {
        stage * (self.outcomes + 1)
    }

    fn visit(&self, stage: usize, prod: f64, w: &[f64], y: &mut Vec<f64>, out: &mut [f64]) {
        let m = self.m;
        let row = &self.chol[stage * m..stage * m + stage];
        let shift = self.mean[stage] + row.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>();
        let s = self.chol[stage * m + stage];
        let base = self.slot(stage);
        let st = &self.stages[stage];
        for (o, set) in st.exits.iter().enumerate() {
            let mass: f64 = set
                .iter()
                .map(|iv| std_mass((iv.lo - shift) / s, (iv.hi - shift) / s))
                .sum();
            out[base + o] += prod * mass;
        }
        for iv in &st.cont {
            let lo = (iv.lo - shift) / s;
            let hi = (iv.hi - shift) / s;
            if stage + 1 == m {
                out[base + self.outcomes] += prod * std_mass(lo, hi);
                continue;
            }
            let (mass, draw) = truncated_draw(lo, hi, w[stage]);
            let p = prod * mass;
            out[base + self.outcomes] += p;
            if p > 0.0 {
                y.truncate(stage);
                y.push(draw);
                self.visit(stage + 1, p, w, y, out);
            }
        }
    }
}

fn estimates(
    shift_means: &[Vec<f64>],
    m: usize,
    outcomes: usize,
) -> (
    Vec<Vec<MvnEstimate>>,
    Vec<Vec<MvnEstimate>>,
    Vec<MvnEstimate>,
) {
    let width = outcomes + 1;
    let est = |f: &dyn Fn(&[f64]) -> f64| {
        let (value, err_est) = summarize(shift_means.iter().map(|s| f(s)));
        MvnEstimate {
            value,
            err_est,
            converged: true,
        }
    };
    let mut exit = Vec::with_capacity(m);
    let mut cumulative = Vec::with_capacity(m);
    let mut cont = Vec::with_capacity(m);
    for i in 0..m {
        exit.push((0..outcomes).map(|o| est(&|s| s[i * width + o])).collect());
        cumulative.push(
            (0..outcomes)
                .map(|o| est(&|s| (0..=i).map(|j| s[j * width + o]).sum()))
                .collect(),
        );
        cont.push(est(&|s| s[i * width + outcomes]));
    }
    (exit, cumulative, cont)
}

/// Stage-wise exit probabilities of `Z ~ moments` for the given stopping
/// sets. Stage `i` constrains coordinate `i`; all stages must list the same
/// number of outcomes.
pub fn sequential_exit_probs(
    stages: &[StageIntervals],
    moments: &MvnMoments,
    tol: &Tolerance,
    seed: u64,
) -> Result<SequentialEstimate, MvnError> {
    let m = stages.len();
    if m == 0 || m > moments.dim() {
        return Err(MvnError::DimensionMismatch {
            expected: moments.dim(),
            got: m,
        });
    }
    let outcomes = stages[0].exits.len();
    if let Some(bad) = stages.iter().find(|s| s.exits.len() != outcomes) {
        return Err(MvnError::DimensionMismatch {
            expected: outcomes,
            got: bad.exits.len(),
        });
    }
    let lead = moments.leading(m);
    let walk = Walk {
        stages,
        mean: lead.mean().to_vec(),
        chol: lead.cholesky()?,
        m,
        outcomes,
    };
    let integrand = |w: &[f64], y: &mut Vec<f64>, out: &mut [f64]| {
        y.clear();
        walk.visit(0, 1.0, w, y, out);
    };
    let accept = |means: &[Vec<f64>]| {
        let (exit, cumulative, cont) = estimates(means, m, outcomes);
        exit.iter()
            .chain(&cumulative)
            .flatten()
            .chain(&cont)
            .all(|e| e.err_est <= tol.target(e.value))
    };
    let run = qmc::integrate(
        m - 1,
        m * (outcomes + 1),
        seed,
        tol.max_iter,
        accept,
        integrand,
    );
    let (mut exit, mut cumulative_exit, mut cont) = estimates(&run.shift_means, m, outcomes);
    for e in exit
        .iter_mut()
        .chain(cumulative_exit.iter_mut())
        .flatten()
        .chain(cont.iter_mut())
    {
        e.converged = run.converged;
    }
    Ok(SequentialEstimate {
        exit,
        cumulative_exit,
        cont,
        converged: run.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mvn::{default_tolerance, mvn_prob_union, HyperRectangle};
    use crate::numerics::norm_cdf;

    const INF: f64 = f64::INFINITY;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn brownian(m: usize, drift: f64) -> MvnMoments {
        let info: Vec<f64> = (1..=m).map(|i| i as f64).collect();
        let mean = info.iter().map(|i| drift * i.sqrt()).collect();
        let cov = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| (info[i.min(j)] / info[i.max(j)]).sqrt())
                    .collect()
            })
            .collect();
        MvnMoments::new(mean, cov).unwrap()
    }

    #[test]
    fn single_stage_is_exact() {
        let st = vec![StageIntervals {
            cont: vec![iv(-1.0, 2.0)],
            exits: vec![vec![iv(2.0, INF)], vec![iv(-INF, -1.0)]],
        }];
        let m = brownian(1, 0.0);
        let r = sequential_exit_probs(&st, &m, &default_tolerance(), 1).unwrap();
        assert!((r.exit[0][0].value - (1.0 - norm_cdf(2.0))).abs() < 1e-15);
        assert!((r.exit[0][1].value - norm_cdf(-1.0)).abs() < 1e-15);
        assert_eq!(r.exit[0][0].err_est, 0.0);
        assert!((r.cont[0].value - (norm_cdf(2.0) - norm_cdf(-1.0))).abs() < 1e-15);
    }

    #[test]
    fn matches_rectangle_unions() {
        let stages: Vec<StageIntervals> = (0..4)
            .map(|i| StageIntervals {
                cont: vec![iv(-0.5 + 0.2 * i as f64, 2.2)],
                exits: vec![vec![iv(2.2, INF)], vec![iv(-INF, -0.5 + 0.2 * i as f64)]],
            })
            .collect();
        let m = brownian(4, 0.4);
        let tol = default_tolerance();
        let seq = sequential_exit_probs(&stages, &m, &tol, 11).unwrap();
        assert!(seq.converged);
        let mut total = 0.0;
        for (j, stage) in stages.iter().enumerate() {
            for o in 0..2 {
                let mut lo = vec![-INF; j + 1];
                let mut hi = vec![INF; j + 1];
                for (i, s) in stages[..j].iter().enumerate() {
                    lo[i] = s.cont[0].lo;
                    hi[i] = s.cont[0].hi;
                }
                lo[j] = stage.exits[o][0].lo;
                hi[j] = stage.exits[o][0].hi;
                let rect = HyperRectangle::new(lo, hi).unwrap();
                let direct = mvn_prob_union(&[rect], &m.leading(j + 1), &tol, 5).unwrap();
                let a = seq.exit[j][o];
                let bound = 3.0 * (a.err_est.powi(2) + direct.err_est.powi(2)).sqrt();
                assert!(
                    (a.value - direct.value).abs() <= bound.max(2e-5),
                    "stage {j} outcome {o}"
                );
                total += a.value;
            }
        }
        assert!((total + seq.cont[3].value - 1.0).abs() < 1e-4);
        let c = &seq.cumulative_exit[3][0];
        let sum: f64 = (0..4).map(|j| seq.exit[j][0].value).sum();
        assert!((c.value - sum).abs() < 1e-12);
    }

    #[test]
    fn split_continuation_region() {
        // Continue on |z| < 1 or |z| > 3, stop in between.
        let stages = vec![
            StageIntervals {
                cont: vec![iv(-INF, -3.0), iv(-1.0, 1.0), iv(3.0, INF)],
                exits: vec![vec![iv(-3.0, -1.0), iv(1.0, 3.0)]],
            },
            StageIntervals {
                cont: vec![],
                exits: vec![vec![Interval::REAL_LINE]],
            },
        ];
        let m = brownian(2, 0.0);
        let seq = sequential_exit_probs(&stages, &m, &default_tolerance(), 2).unwrap();
        let first = 2.0 * (norm_cdf(3.0) - norm_cdf(1.0));
        assert!((seq.exit[0][0].value - first).abs() < 1e-14);
        assert!((seq.exit[1][0].value - (1.0 - first)).abs() < 1e-4);
        assert!((seq.cumulative_exit[1][0].value - 1.0).abs() < 1e-4);
        assert!(seq.cont[1].value == 0.0);
    }

    #[test]
    fn mismatched_outcomes_rejected() {
        let stages = vec![
            StageIntervals {
                cont: vec![iv(-1.0, 1.0)],
                exits: vec![vec![iv(1.0, INF)]],
            },
            StageIntervals {
                cont: vec![],
                exits: vec![vec![], vec![]],
            },
        ];
        let r = sequential_exit_probs(&stages, &brownian(2, 0.0), &default_tolerance(), 1);
        assert!(matches!(r, Err(MvnError::DimensionMismatch { .. })));
    }
}
