//! Statistic values at which a Bayes factor equals a threshold.

use seqbf::bayesfactor::{critical_t, critical_z, AnalysisPriorSpec, CriticalSet, InformedT};

fn show(label: &str, set: &CriticalSet) {
    match set {
        CriticalSet::Single { z_crit } => println!("{label:<40} {z_crit:>9.4}"),
        CriticalSet::Pair { boundary } => println!(
            "{label:<40} {:>9.4} {:>9.4}",
            boundary.z_minus, boundary.z_plus
        ),
        CriticalSet::Unattainable { reason } => println!("{label:<40} unattainable: {reason}"),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sigma = (2.0f64 / 50.0).sqrt();
    let specs = [
        (
            "directional vs directional",
            AnalysisPriorSpec::DirectionalDirectional { mu: 0.0, tau: 1.0 },
        ),
        ("point vs point", AnalysisPriorSpec::PointPoint { mu: 0.5 }),
        (
            "point vs normal",
            AnalysisPriorSpec::PointTwoSided { mu: 0.0, tau: 1.0 },
        ),
        (
            "point vs truncated normal",
            AnalysisPriorSpec::PointDirectional { mu: 0.0, tau: 1.0 },
        ),
    ];
    for k in [0.1, 10.0] {
        println!("k = {k}, sigma = {sigma:.4}");
        for (name, spec) in &specs {
            show(name, &critical_z(k, sigma, spec)?);
        }
    }

    println!("one-sided JZS t-test, k = 1/10, n = 20 to 100 per group");
    let jzs = InformedT::jzs_one_sided();
    for n in [20.0, 40.0, 60.0, 80.0, 100.0] {
        show(
            &format!("n = {n}"),
            &critical_t(0.1, n / 2.0, 2.0 * n - 2.0, &jzs)?,
        );
    }
    Ok(())
}
