//! A 61-look design: a two-sample t-test analysed after every additional
//! pair from 40 to 100 per group, under an informative and a null design
//! prior.

use std::time::Instant;

use seqbf::cli::DesignConfig;
use seqbf::design::characteristics;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for file in ["schoenbrodt.json", "schoenbrodt-null.json"] {
        let path = format!("{}/configs/{file}", env!("CARGO_MANIFEST_DIR"));
        let config = DesignConfig::load(&path)?;
        let design = config.design()?;
        let start = Instant::now();
        let r = characteristics(&design, &config.tolerance(), config.seed)?;
        let last = r.stages.last().unwrap();
        println!(
            "{}: Pr(H1) = {:.4}, Pr(H0) = {:.4}, E(n) = {:.2} per group ({:.1} s)",
            config.name,
            last.h1.value,
            last.h0.value,
            r.expected_n[0],
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
