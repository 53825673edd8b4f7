//! Human-readable reports and long-format CSV rows.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bayesfactor::AnalysisPriorSpec;
use crate::design::{DesignReport, SequentialDesign};
use crate::mvn::MvnEstimate;

pub const CSV_HEADER: [&str; 8] = [
    "design_id",
    "m",
    "stage",
    "n1",
    "n2",
    "metric",
    "value",
    "err_est",
];

/// One row of the long-format CSV output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub design_id: String,
    pub m: usize,
    pub stage: usize,
    pub n1: f64,
    pub n2: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub err_est: Option<f64>,
}

pub fn write_csv(rows: &[CsvRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.design_id.clone(),
            r.m.to_string(),
            r.stage.to_string(),
            r.n1.to_string(),
            r.n2.map(|v| v.to_string()).unwrap_or_default(),
            r.metric.clone(),
            r.value.to_string(),
            r.err_est.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Stagewise probabilities and sample size summaries of `report` as CSV rows.
pub fn report_rows(design_id: &str, report: &DesignReport) -> Vec<CsvRow> {
    let m = report.m();
    let mut rows = Vec::new();
    let row =
        |stage: usize, n: &[f64], metric: &str, est: Option<MvnEstimate>, value: f64| CsvRow {
            design_id: design_id.to_string(),
            m,
            stage,
            n1: n[0],
            n2: n.get(1).copied(),
            metric: metric.to_string(),
            value: est.map_or(value, |e| e.value),
            err_est: est.map(|e| e.err_est),
        };
    for s in &report.stages {
        rows.push(row(s.stage, &s.n_report, "pr_h1", Some(s.h1), 0.0));
        rows.push(row(s.stage, &s.n_report, "pr_h0", Some(s.h0), 0.0));
        rows.push(row(
            s.stage,
            &s.n_report,
            "pr_inconclusive",
            Some(s.inconclusive),
            0.0,
        ));
    }
    let last = &report.stages[m - 1].n_report;
    for (a, (e, sd)) in report.expected_n.iter().zip(&report.sd_n).enumerate() {
        rows.push(row(m, last, &format!("expected_n_{}", a + 1), None, *e));
        rows.push(row(m, last, &format!("sd_n_{}", a + 1), None, *sd));
    }
    rows.push(row(m, last, "cov_n", None, report.cov_n));
    rows
}

/// Shortest decimal rendering with at most four decimals.
pub fn fmt_num(x: f64) -> String {
    if x == x.round() && x.abs() < 1e15 {
        return format!("{x:.0}");
    }
    let s = format!("{x:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// `1/10` style for thresholds below one with an integer reciprocal.
pub fn fmt_threshold(k: f64) -> String {
    let r = 1.0 / k;
    if k < 1.0 && (r - r.round()).abs() < 1e-9 * r {
        format!("1/{}", r.round())
    } else {
        fmt_num(k)
    }
}

fn parameter(design: &SequentialDesign) -> &'static str {
    if design.analysis_prior.is_t_test() {
        "SMD"
    } else {
        "theta"
    }
}

fn hypotheses(design: &SequentialDesign) -> (String, String) {
    let name = if design.analysis_prior.is_t_test() {
        "SMD (stand. mean diff.) "
    } else {
        "theta"
    };
    let (h0, h1) = match design.analysis_prior {
        AnalysisPriorSpec::DirectionalDirectional { .. } => ("<= 0".to_string(), "> 0".to_string()),
        AnalysisPriorSpec::PointPoint { mu } => ("= 0".to_string(), format!("= {}", fmt_num(mu))),
        AnalysisPriorSpec::PointTwoSided { .. } => ("= 0".to_string(), "!= 0".to_string()),
        AnalysisPriorSpec::PointDirectional { .. } => ("= 0".to_string(), "> 0".to_string()),
        AnalysisPriorSpec::InformedT(t) => {
            let h1 = if t.a >= 0.0 {
                "> 0"
            } else if t.b <= 0.0 {
                "< 0"
            } else {
                "!= 0"
            };
            ("= 0".to_string(), h1.to_string())
        }
    };
    (format!("{name} {h0}"), format!("{name} {h1}"))
}

/// Report in the layout of the reference R output.
pub fn text_report(design: &SequentialDesign, report: &DesignReport) -> String {
    let mut out = String::new();
    let p = parameter(design);
    let (h0, h1) = hypotheses(design);
    let prior = design.design_prior;
    let design_prior = if prior.tau_d == 0.0 {
        format!("{p} = {}", fmt_num(prior.mu_d))
    } else {
        format!(
            "{p} ~ N(mean = {}, sd = {})",
            fmt_num(prior.mu_d),
            fmt_num(prior.tau_d)
        )
    };
    let label = |s: &str| format!("{:<18}", format!("{s}:"));
    let _ = writeln!(out, "Sequential Bayes Factor Design");
    let _ = writeln!(out, "--------------------------------");
    let _ = writeln!(out, "{}{h0}", label("H0"));
    let _ = writeln!(out, "{}{h1}", label("H1"));
    let _ = writeln!(
        out,
        "{}{}",
        label("Analysis prior"),
        design.analysis_prior.describe()
    );
    let _ = writeln!(out, "{}{design_prior}", label("Design prior"));
    let _ = writeln!(
        out,
        "{}H1 if BF01 <= {}, H0 if BF01 >= {}",
        label("BF thresholds"),
        fmt_threshold(design.thresholds.k1),
        fmt_threshold(design.thresholds.k0)
    );
    let _ = writeln!(out, "{}{}", label("Number of looks"), design.m());
    let arms = design.schedule.arms();
    for a in 0..arms {
        let sizes: Vec<String> = design
            .schedule
            .stages()
            .iter()
            .map(|s| fmt_num(s.n_report[a]))
            .collect();
        let name = if arms == 1 {
            "Sample sizes".to_string()
        } else {
            format!("Sample sizes {}", a + 1)
        };
        let _ = writeln!(out, "{}{}", label(&name), sizes.join(", "));
    }
    let _ = writeln!(out);
    let _ = writeln!(out);
    match report.replications {
        Some(r) => {
            let _ = writeln!(
                out,
                "Stagewise cumulative probabilities ({r} simulated trials):"
            );
        }
        None => {
            let _ = writeln!(out, "Stagewise cumulative probabilities:");
        }
    }
    let _ = writeln!(out, " Stage Pr(H1 stop) Pr(H0 stop) Pr(inconclusive)");
    for s in &report.stages {
        let _ = writeln!(
            out,
            "{:>6} {:>11.4} {:>11.4} {:>16.4}",
            s.stage, s.h1.value, s.h0.value, s.inconclusive.value
        );
    }
    let _ = writeln!(out);
    for a in 0..arms {
        let suffix = if arms == 1 {
            String::new()
        } else {
            format!(" {}", a + 1)
        };
        let _ = writeln!(
            out,
            "Expected sample size{suffix}: {:.4}",
            report.expected_n[a]
        );
    }
    for a in 0..arms {
        let suffix = if arms == 1 {
            String::new()
        } else {
            format!(" {}", a + 1)
        };
        let _ = writeln!(
            out,
            "Standard deviation of sample size{suffix}: {:.4}",
            report.sd_n[a]
        );
    }
    let worst = report
        .stages
        .iter()
        .flat_map(|s| [s.h1.err_est, s.h0.err_est, s.inconclusive.err_est])
        .fold(0.0, f64::max);
    let _ = writeln!(out, "Largest probability error bound: {worst:.1e}");
    let _ = writeln!(out);
    for w in &report.warnings {
        let _ = writeln!(out, "WARNING: {w}");
    }
    let _ = writeln!(out, "NOTE:  BF01 < 1 indicates evidence for H1 over H0");
    out
}

/// `BF01 = 0.108 (1/9.2)` and a sentence interpreting it.
pub fn bf_text(bf01: f64) -> String {
    let head = if bf01 < 1.0 {
        format!("BF01 = {bf01:.3} (1/{:.1})", 1.0 / bf01)
    } else {
        format!("BF01 = {bf01:.3}")
    };
    let line = if (bf01.ln()).abs() < 5e-4 {
        "The data are equally likely under H0 and H1.".to_string()
    } else if bf01 < 1.0 {
        format!(
            "The data are {:.1} times more likely under H1 than under H0.",
            1.0 / bf01
        )
    } else {
        format!("The data are {bf01:.1} times more likely under H0 than under H1.")
    };
    format!("{head}\n{line}\n")
}
