use crate::numerics::{norm_cdf, norm_pdf, norm_quantile_fast, Tolerance};

use super::qmc::{self, summarize};
use super::{HyperRectangle, MvnError, MvnEstimate, MvnMoments};

/// Standard normal mass of `(lo, hi)`, computed in the tail that keeps
/// precision.
#[inline]
pub(crate) fn std_mass(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        norm_cdf(-lo) - norm_cdf(-hi)
    } else {
        norm_cdf(hi) - norm_cdf(lo)
    }
}

/// Mass of `(lo, hi)` and the `w`-quantile of the standard normal truncated
/// to it.
#[inline]
pub(crate) fn truncated_draw(lo: f64, hi: f64, w: f64) -> (f64, f64) {
    const TINY: f64 = 1e-300;
    const NEAR_ONE: f64 = 1.0 - 1e-16;
    if lo > 0.0 {
        let pl = norm_cdf(-lo);
        let mass = pl - norm_cdf(-hi);
        let p = (pl - w * mass).clamp(TINY, NEAR_ONE);
        (mass, -norm_quantile_fast(p))
    } else {
        let pl = norm_cdf(lo);
        let mass = norm_cdf(hi) - pl;
        let p = (pl + w * mass).clamp(TINY, NEAR_ONE);
        (mass, norm_quantile_fast(p))
    }
}

fn truncated_mean(lo: f64, hi: f64) -> f64 {
    let mass = std_mass(lo, hi);
    if mass > 1e-300 {
        let pdf = |x: f64| if x.is_infinite() { 0.0 } else { norm_pdf(x) };
        (pdf(lo) - pdf(hi)) / mass
    } else if lo.is_infinite() {
        hi
    } else if hi.is_infinite() {
        lo
    } else {
        0.5 * (lo + hi)
    }
}

struct Prepared {
    k: usize,
    chol: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Cholesky factorisation that greedily places the coordinate with the
/// smallest expected conditional mass first.
fn prioritized_cholesky(
    mut cov: Vec<f64>,
    mut lower: Vec<f64>,
    mut upper: Vec<f64>,
) -> Result<Prepared, MvnError> {
    let k = lower.len();
    let mut l = vec![0.0f64; k * k];
    let mut y = vec![0.0f64; k];
    for i in 0..k {
        let mut best = i;
        let mut best_mass = f64::INFINITY;
        for j in i..k {
            let v = cov[j * k + j] - (0..i).map(|m| l[j * k + m].powi(2)).sum::<f64>();
            if !(v > 1e-14 * cov[j * k + j]) {
                return Err(MvnError::NotPositiveDefinite { index: j, pivot: v });
            }
            let s = v.sqrt();
            let shift: f64 = (0..i).map(|m| l[j * k + m] * y[m]).sum();
            let mass = std_mass((lower[j] - shift) / s, (upper[j] - shift) / s);
            if mass < best_mass {
                best_mass = mass;
                best = j;
            }
        }
        if best != i {
            lower.swap(i, best);
            upper.swap(i, best);
            for r in 0..k {
                cov.swap(r * k + i, r * k + best);
            }
            for c in 0..k {
                cov.swap(i * k + c, best * k + c);
            }
            for m in 0..i {
                l.swap(i * k + m, best * k + m);
            }
        }
        let diag = cov[i * k + i] - (0..i).map(|m| l[i * k + m].powi(2)).sum::<f64>();
        let lii = diag.sqrt();
        l[i * k + i] = lii;
        for r in i + 1..k {
            let s: f64 = (0..i).map(|m| l[r * k + m] * l[i * k + m]).sum();
            l[r * k + i] = (cov[r * k + i] - s) / lii;
        }
        let shift: f64 = (0..i).map(|m| l[i * k + m] * y[m]).sum();
        y[i] = truncated_mean((lower[i] - shift) / lii, (upper[i] - shift) / lii);
    }
    Ok(Prepared {
        k,
        chol: l,
        lower,
        upper,
    })
}

/// `Pr(lower ≤ Z ≤ upper)` for `Z ~ N(mean, cov)`.
///
/// `tol.max_iter` caps the number of integrand evaluations; when it is hit
/// the best estimate is returned with `converged = false`.
pub fn mvn_prob(
    rect: &HyperRectangle,
    moments: &MvnMoments,
    tol: &Tolerance,
    seed: u64,
) -> Result<MvnEstimate, MvnError> {
    let d = moments.dim();
    if rect.dim() != d {
        return Err(MvnError::DimensionMismatch {
            expected: d,
            got: rect.dim(),
        });
    }
    // Unbounded coordinates marginalise out exactly.
    let active: Vec<usize> = (0..d)
        .filter(|&i| !rect.interval(i).is_real_line())
        .collect();
    let k = active.len();
    if k == 0 {
        return Ok(MvnEstimate::exact(1.0));
    }
    let mut cov = Vec::with_capacity(k * k);
    for &i in &active {
        for &j in &active {
            cov.push(moments.cov(i, j));
        }
    }
    let lower: Vec<f64> = active
        .iter()
        .map(|&i| rect.lower()[i] - moments.mean()[i])
        .collect();
    let upper: Vec<f64> = active
        .iter()
        .map(|&i| rect.upper()[i] - moments.mean()[i])
        .collect();
    if k == 1 {
        let s = cov[0].sqrt();
        return Ok(MvnEstimate::exact(std_mass(lower[0] / s, upper[0] / s)));
    }

    let prep = prioritized_cholesky(cov, lower, upper)?;
    let integrand = |w: &[f64], y: &mut Vec<f64>, out: &mut [f64]| {
        let Prepared {
            k,
            chol,
            lower,
            upper,
        } = &prep;
        y.resize(*k, 0.0);
        let mut prod = 1.0;
        for i in 0..*k {
            let row = &chol[i * k..i * k + i];
            let shift: f64 = row.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            let lii = chol[i * k + i];
            let lo = (lower[i] - shift) / lii;
            let hi = (upper[i] - shift) / lii;
            if i + 1 == *k {
                prod *= std_mass(lo, hi);
            } else {
                let (mass, draw) = truncated_draw(lo, hi, w[i]);
                prod *= mass;
                if prod <= 0.0 {
                    break;
                }
                y[i] = draw;
            }
        }
        out[0] += prod;
    };
    let accept = |means: &[Vec<f64>]| {
        let (value, err) = summarize(means.iter().map(|m| m[0]));
        err <= tol.target(value)
    };
    let run = qmc::integrate(k - 1, 1, seed, tol.max_iter, accept, integrand);
    let (value, err_est) = summarize(run.shift_means.iter().map(|m| m[0]));
    Ok(MvnEstimate {
        value,
        err_est,
        converged: run.converged,
    })
}

/// Probability of a union of pairwise disjoint rectangles; errors are
/// aggregated in quadrature.
pub fn mvn_prob_union(
    rects: &[HyperRectangle],
    moments: &MvnMoments,
    tol: &Tolerance,
    seed: u64,
) -> Result<MvnEstimate, MvnError> {
    let mut value = 0.0;
    let mut var = 0.0;
    let mut converged = true;
    for rect in rects {
        let est = mvn_prob(rect, moments, tol, seed)?;
        value += est.value;
        var += est.err_est * est.err_est;
        converged &= est.converged;
    }
    Ok(MvnEstimate {
        value,
        err_est: var.sqrt(),
        converged,
    })
}
