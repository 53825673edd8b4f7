//! Smallest maximum sample size giving 90% probability of correct evidence
//! in a three-look version of the Low-PV trial.

use seqbf::cli::DesignConfig;
use seqbf::design::{find_max_n, Hypothesis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (file, hypothesis) in [
        ("lowpv-h1.json", Hypothesis::H1),
        ("lowpv-h0.json", Hypothesis::H0),
    ] {
        let path = format!("{}/configs/{file}", env!("CARGO_MANIFEST_DIR"));
        let config = DesignConfig::load(&path)?;
        let template = config.design()?;
        let r = find_max_n(
            &template,
            0.9,
            hypothesis,
            (4, 300),
            &config.tolerance(),
            config.seed,
        )?;
        println!(
            "{hypothesis:?}: n_max = {} per group, looks at {:?}, probability {:.4}",
            r.n_max, r.n_per_stage, r.probability.value
        );
    }
    Ok(())
}
