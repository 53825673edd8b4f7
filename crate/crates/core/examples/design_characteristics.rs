//! Operating characteristics of the five-look two-sample t-test design
//! bundled as `configs/appendix-a.json`.

use seqbf::cli::output::text_report;
use seqbf::cli::DesignConfig;
use seqbf::design::characteristics;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/appendix-a.json");
    let config = DesignConfig::load(path)?;
    let design = config.design()?;
    let report = characteristics(&design, &config.tolerance(), config.seed)?;
    print!("{}", text_report(&design, &report));
    println!("coefficient of variation of n: {:.4}", report.cov_n);
    Ok(())
}
