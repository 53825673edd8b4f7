//! Analytic characteristics against simulated trials, and the sampled
//! moments of the z-statistics against their marginal law.

use seqbf::cli::DesignConfig;
use seqbf::design::{build_schedule, characteristics, DesignPrior, InformationModel};
use seqbf::simulate::{empirical_cov_check, simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/two-sided-m4.json");
    let config = DesignConfig::load(path)?;
    let design = config.design()?;
    let analytic = characteristics(&design, &config.tolerance(), config.seed)?;
    let simulated = simulate(&design, &SimConfig::new(100_000, 42)?)?;
    println!("stage   analytic H1  simulated H1   analytic H0  simulated H0");
    for (a, s) in analytic.stages.iter().zip(&simulated.stages) {
        println!(
            "{:>5} {:>13.4} {:>13.4} {:>13.4} {:>13.4}",
            a.stage, a.h1.value, s.h1.value, a.h0.value, s.h0.value
        );
    }
    println!(
        "E(n): analytic {:.3}, simulated {:.3}",
        analytic.expected_n[0], simulated.expected_n[0]
    );

    let schedule = build_schedule(
        &InformationModel::UnitVariance { lambda2: 1.0 },
        &[10.0, 20.0, 30.0],
    )?;
    let check = empirical_cov_check(
        &schedule,
        &DesignPrior::new(0.5, 0.1)?,
        &SimConfig::new(100_000, 3)?,
    )?;
    println!(
        "moment check: largest deviation {:.4} ({:.2} standard errors)",
        check.max_abs_deviation, check.max_standardized
    );
    Ok(())
}
