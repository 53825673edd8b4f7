use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayesfactor::{
    critical_t, critical_z, log_bf01_t, log_bf01_z, AnalysisPriorSpec, BfError, CriticalSet,
    ZObservation,
};
use crate::mvn::{HyperRectangle, Interval};

use super::{DesignError, Hypothesis, SequentialDesign, Stage, Thresholds};

/// Decision sets of one analysis on the z scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageBoundary {
    pub h1_critical: CriticalSet,
    pub h0_critical: CriticalSet,
    /// `BF01 ≤ k1`.
    pub h1_set: Vec<Interval>,
    /// `BF01 ≥ k0`.
    pub h0_set: Vec<Interval>,
    pub cont: Vec<Interval>,
}

impl StageBoundary {
    pub fn h1_stoppable(&self) -> bool {
        !self.h1_set.is_empty()
    }

    pub fn h0_stoppable(&self) -> bool {
        !self.h0_set.is_empty()
    }

    /// Decision for an observed z, `None` to continue.
    pub fn classify(&self, z: f64) -> Option<Hypothesis> {
        let inside = |set: &[Interval]| set.iter().any(|iv| iv.lo <= z && z <= iv.hi);
        if inside(&self.h1_set) {
            Some(Hypothesis::H1)
        } else if inside(&self.h0_set) {
            Some(Hypothesis::H0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Label {
    H1,
    H0,
    Continue,
}

/// `ln BF01` as a function of the stage statistic.
pub(crate) fn stage_log_bf(
    spec: &AnalysisPriorSpec,
    stage: &Stage,
) -> impl Fn(f64) -> Result<f64, BfError> {
    let spec = *spec;
    let (info, df) = (stage.info, stage.df);
    move |z: f64| match spec {
        AnalysisPriorSpec::InformedT(t) => {
            log_bf01_t(z, info, df.expect("validated t schedule"), &t)
        }
        _ => log_bf01_z(
            &ZObservation {
                z,
                sigma: info.sqrt().recip(),
            },
            &spec,
        ),
    }
}

fn stage_critical(spec: &AnalysisPriorSpec, stage: &Stage, k: f64) -> Result<CriticalSet, BfError> {
    match spec {
        AnalysisPriorSpec::InformedT(t) => {
            critical_t(k, stage.info, stage.df.expect("validated t schedule"), t)
        }
        _ => critical_z(k, stage.info.sqrt().recip(), spec),
    }
}

/// Splits the line at the critical values and labels each piece by the
/// Bayes factor at an interior probe point. This fixes the orientation of
/// every family, including decreasing and two-sided ones, and turns an
/// unattainable threshold into an empty stopping set.
fn partition<F>(
    roots: &[f64],
    log_bf: F,
    log_k0: f64,
    log_k1: f64,
) -> Result<[Vec<Interval>; 3], BfError>
where
    F: Fn(f64) -> Result<f64, BfError>,
{
    let mut cuts: Vec<f64> = roots.iter().copied().filter(|r| r.is_finite()).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(cuts);
    edges.push(f64::INFINITY);

    let mut pieces: Vec<(Interval, Label)> = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let probe = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (false, true) => hi - 1.0,
            (true, false) => lo + 1.0,
            (false, false) => 0.0,
        };
        let v = log_bf(probe)?;
        let label = if v <= log_k1 {
            Label::H1
        } else if v >= log_k0 {
            Label::H0
        } else {
            Label::Continue
        };
        match pieces.last_mut() {
            Some((iv, l)) if *l == label => iv.hi = hi,
            _ => pieces.push((Interval { lo, hi }, label)),
        }
    }
    let pick = |want: Label| -> Vec<Interval> {
        pieces
            .iter()
            .filter(|(_, l)| *l == want)
            .map(|(iv, _)| *iv)
            .collect()
    };
    Ok([pick(Label::H1), pick(Label::H0), pick(Label::Continue)])
}

/// Critical values and decision intervals at every analysis.
pub fn stage_boundaries(design: &SequentialDesign) -> Result<Vec<StageBoundary>, DesignError> {
    design.validate()?;
    let spec = design.analysis_prior;
    let Thresholds { k0, k1 } = design.thresholds;
    design
        .schedule
        .stages()
        .par_iter()
        .map(|stage| {
            let h1_critical = stage_critical(&spec, stage, k1)?;
            let h0_critical = stage_critical(&spec, stage, k0)?;
            let mut roots = h1_critical.roots();
            roots.extend(h0_critical.roots());
            let [h1_set, h0_set, cont] =
                partition(&roots, stage_log_bf(&spec, stage), k0.ln(), k1.ln())?;
            Ok(StageBoundary {
                h1_critical,
                h0_critical,
                h1_set,
                h0_set,
                cont,
            })
        })
        .collect()
}

/// Stopping regions of one analysis as `j`-dimensional rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRegions {
    pub h1_rects: Vec<HyperRectangle>,
    pub h0_rects: Vec<HyperRectangle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingRegions {
    pub stages: Vec<StageRegions>,
    /// Paths still undecided after the last analysis.
    pub continuation: Vec<HyperRectangle>,
    pub boundaries: Vec<StageBoundary>,
}

/// Enumerates the stopping regions: the stage-`j` sets extend every
/// continuation rectangle of stage `j − 1` by one decision interval.
pub fn stopping_regions(design: &SequentialDesign) -> Result<StoppingRegions, DesignError> {
    let boundaries = stage_boundaries(design)?;
    let extend = |prefixes: &[Vec<Interval>], set: &[Interval]| -> Vec<Vec<Interval>> {
        prefixes
            .iter()
            .flat_map(|p| {
                set.iter().map(move |iv| {
                    let mut r = p.clone();
                    r.push(*iv);
                    r
                })
            })
            .collect()
    };
    let to_rects = |paths: Vec<Vec<Interval>>| -> Result<Vec<HyperRectangle>, DesignError> {
        paths
            .iter()
            .map(|p| HyperRectangle::from_intervals(p).map_err(DesignError::from))
            .collect()
    };
    let mut prefixes: Vec<Vec<Interval>> = vec![Vec::new()];
    let mut stages = Vec::with_capacity(boundaries.len());
    for b in &boundaries {
        stages.push(StageRegions {
            h1_rects: to_rects(extend(&prefixes, &b.h1_set))?,
            h0_rects: to_rects(extend(&prefixes, &b.h0_set))?,
        });
        prefixes = extend(&prefixes, &b.cont);
    }
    let continuation = if prefixes.iter().all(|p| !p.is_empty()) {
        to_rects(prefixes)?
    } else {
        Vec::new()
    };
    Ok(StoppingRegions {
        stages,
        continuation,
        boundaries,
    })
}
