//! Stopping regions of a two-look design with a two-sided analysis prior:
//! the number of rectangles doubles at the second look.

use seqbf::bayesfactor::AnalysisPriorSpec;
use seqbf::design::{
    build_schedule, stopping_regions, DesignPrior, InformationModel, SequentialDesign, Thresholds,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = InformationModel::TwoSampleZ;
    let design = SequentialDesign::new(
        build_schedule(&model, &[50.0, 100.0])?,
        Thresholds::new(6.0, 1.0 / 6.0)?,
        AnalysisPriorSpec::PointTwoSided { mu: 0.0, tau: 1.0 },
        DesignPrior::point(0.0),
        model,
    )?;
    let regions = stopping_regions(&design)?;
    for (j, stage) in regions.stages.iter().enumerate() {
        println!("look {}", j + 1);
        for (name, rects) in [("H1", &stage.h1_rects), ("H0", &stage.h0_rects)] {
            for r in rects {
                let sides: Vec<String> = (0..r.dim())
                    .map(|i| format!("[{:.3}, {:.3}]", r.lower()[i], r.upper()[i]))
                    .collect();
                println!("  stop for {name}: {}", sides.join(" x "));
            }
        }
    }
    println!(
        "still open after the last look: {} rectangles",
        regions.continuation.len()
    );
    Ok(())
}
