//! Rectangle probabilities of correlated normal vectors.

use seqbf::mvn::{default_tolerance, mvn_prob, HyperRectangle, MvnMoments};
use seqbf::numerics::Tolerance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tol = default_tolerance();

    // Positive orthant with correlation 1/2: exactly 1/3.
    let m = MvnMoments::new(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]])?;
    let orthant = HyperRectangle::new(vec![0.0, 0.0], vec![f64::INFINITY; 2])?;
    let p = mvn_prob(&orthant, &m, &tol, 1)?;
    println!(
        "P(Z1 > 0, Z2 > 0) = {:.6} +/- {:.1e} (exact 1/3)",
        p.value, p.err_est
    );

    // Canonical covariance sqrt(I_i / I_j) of 61 equally spaced looks.
    let info: Vec<f64> = (40..=100).map(|n| n as f64 / 2.0).collect();
    let d = info.len();
    let cov = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (info[i.min(j)] / info[i.max(j)]).sqrt())
                .collect()
        })
        .collect();
    let m = MvnMoments::new(vec![0.0; d], cov)?;
    let band = HyperRectangle::new(vec![-2.5; d], vec![2.5; d])?;
    let p = mvn_prob(&band, &m, &Tolerance::new(5e-4, 0.0, 4_000_000)?, 7)?;
    println!(
        "P(|Z_j| < 2.5 for all {d} looks) = {:.5} +/- {:.1e}, converged: {}",
        p.value, p.err_est, p.converged
    );
    Ok(())
}
