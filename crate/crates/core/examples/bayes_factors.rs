//! Bayes factors of the Low-PV trial (point vs point hypotheses on the log
//! odds ratio) and of a two-sample t-test with a one-sided JZS prior.

use seqbf::bayesfactor::{bf01_t, bf01_z, AnalysisPriorSpec, InformedT, ZObservation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = AnalysisPriorSpec::PointPoint { mu: 3f64.ln() };
    // Estimated odds ratios 5.1 and 3.5 with z-values 2.23 and 2.60.
    for (or, z) in [(5.1f64, 2.23), (3.5, 2.60)] {
        let sigma = or.ln() / z;
        let bf = bf01_z(&ZObservation::new(z, sigma)?, &spec)?;
        println!(
            "OR = {or:.1}, z = {z:.2}: BF01 = {bf:.4} (1/{:.1})",
            1.0 / bf
        );
    }

    let families = [
        AnalysisPriorSpec::DirectionalDirectional { mu: 0.0, tau: 1.0 },
        AnalysisPriorSpec::PointTwoSided { mu: 0.0, tau: 1.0 },
        AnalysisPriorSpec::PointDirectional { mu: 0.0, tau: 1.0 },
    ];
    let obs = ZObservation::new(2.0, 0.2)?;
    for f in families {
        println!("{:<55} BF01 = {:.4}", f.describe(), bf01_z(&obs, &f)?);
    }

    let jzs = InformedT::jzs_one_sided();
    let (n1, n2) = (50.0, 50.0);
    let bf = bf01_t(2.2, n1 * n2 / (n1 + n2), n1 + n2 - 2.0, &jzs)?;
    println!("{}: t = 2.2, n = 50 + 50: BF01 = {bf:.4}", jzs.describe());
    Ok(())
}
