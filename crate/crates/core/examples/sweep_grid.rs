//! Probability of correct evidence over maximum sample size and number of
//! looks, printed as long-format CSV.

use seqbf::cli::output::{write_csv, CsvRow};
use seqbf::cli::DesignConfig;
use seqbf::design::{characteristics, equally_spaced, DesignPrior};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/lowpv-h1.json");
    let config = DesignConfig::load(path)?;
    let template = config.design()?;
    let mut rows = Vec::new();
    for (label, prior, correct_h1) in [
        ("theta = log 3", DesignPrior::point(3f64.ln()), true),
        ("theta = 0", DesignPrior::point(0.0), false),
    ] {
        for m in [1, 2, 3] {
            for n_max in (40..=120).step_by(20) {
                let design = template
                    .rescheduled(&equally_spaced(n_max as f64, m, true))?
                    .with_design_prior(prior)?;
                let report = characteristics(&design, &config.tolerance(), config.seed)?;
                let last = report.stages.last().unwrap();
                let p = if correct_h1 { last.h1 } else { last.h0 };
                rows.push(CsvRow {
                    design_id: format!("m={m}|n_max={n_max}|{label}"),
                    m,
                    stage: m,
                    n1: n_max as f64,
                    n2: Some(n_max as f64),
                    metric: "pr_correct".into(),
                    value: p.value,
                    err_est: Some(p.err_est),
                });
            }
        }
    }
    print!("{}", write_csv(&rows));
    Ok(())
}
