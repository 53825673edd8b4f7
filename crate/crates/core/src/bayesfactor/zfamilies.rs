use crate::numerics::{log_norm_cdf, norm_quantile, try_find_root, NumericsError, Tolerance};

use super::{
    check_sigma, check_threshold, AnalysisPriorSpec, BfError, CriticalSet, PosteriorMoments,
    TwoSidedBoundary, ZObservation,
};

fn not_z_family() -> BfError {
    BfError::InvalidSpec("the informed t prior needs bf01_t, not bf01_z".to_string())
}

fn log_point_two_sided(z: f64, sigma: f64, mu: f64, tau: f64) -> f64 {
    let r = (tau / sigma).powi(2);
    let a = mu / sigma;
    0.5 * r.ln_1p() - 0.5 * (z * z - (z - a).powi(2) / (1.0 + r))
}

/// `ln BF01` for a z-based family.
pub fn log_bf01_z(obs: &ZObservation, spec: &AnalysisPriorSpec) -> Result<f64, BfError> {
    spec.validate()?;
    check_sigma(obs.sigma)?;
    let ZObservation { z, sigma } = *obs;
    let value = match *spec {
        AnalysisPriorSpec::DirectionalDirectional { mu, tau } => {
            let post = PosteriorMoments::new(obs, mu, tau);
            let x = post.mu_star / post.tau_star;
            let prior = mu / tau;
            log_norm_cdf(-x) - log_norm_cdf(x) - log_norm_cdf(-prior) + log_norm_cdf(prior)
        }
        AnalysisPriorSpec::PointPoint { mu } => mu * mu / (2.0 * sigma * sigma) - z * mu / sigma,
        AnalysisPriorSpec::PointTwoSided { mu, tau } => log_point_two_sided(z, sigma, mu, tau),
        AnalysisPriorSpec::PointDirectional { mu, tau } => {
            let post = PosteriorMoments::new(obs, mu, tau);
            log_point_two_sided(z, sigma, mu, tau) + log_norm_cdf(mu / tau)
                - log_norm_cdf(post.mu_star / post.tau_star)
        }
        AnalysisPriorSpec::InformedT(_) => return Err(not_z_family()),
    };
    if value.is_nan() {
        return Err(BfError::Numerics {
            context: format!("ln BF01 at z = {z}, sigma = {sigma}"),
            source: NumericsError::NonFiniteFunction { x: z },
        });
    }
    Ok(value)
}

/// `BF01` for a z-based family; values below `1` favour the alternative.
pub fn bf01_z(obs: &ZObservation, spec: &AnalysisPriorSpec) -> Result<f64, BfError> {
    log_bf01_z(obs, spec).map(f64::exp)
}

/// The z-values at which `BF01 = k` when the estimate has standard error
/// `sigma`.
pub fn critical_z(k: f64, sigma: f64, spec: &AnalysisPriorSpec) -> Result<CriticalSet, BfError> {
    let log_k = check_threshold(k)?;
    check_sigma(sigma)?;
    spec.validate()?;
    match *spec {
        AnalysisPriorSpec::DirectionalDirectional { mu, tau } => {
            // Solve ln Φ(-x) - ln Φ(x) = ln k + ln c for x = μ*/τ*, then
            // invert the posterior mean. The quantile is taken in whichever
            // tail keeps precision.
            let prior = mu / tau;
            let l = log_k + log_norm_cdf(-prior) - log_norm_cdf(prior);
            let x = if l > 0.0 {
                norm_quantile(1.0 / (1.0 + l.exp()))
            } else {
                norm_quantile(1.0 / (1.0 + (-l).exp())).map(|q| -q)
            };
            let Ok(x) = x else {
                return Ok(CriticalSet::Unattainable {
                    reason: format!("ln k = {log_k} is beyond double precision"),
                });
            };
            let tau_star = (1.0 / (1.0 / (sigma * sigma) + 1.0 / (tau * tau))).sqrt();
            Ok(CriticalSet::Single {
                z_crit: (x / tau_star - mu / (tau * tau)) * sigma,
            })
        }
        AnalysisPriorSpec::PointPoint { mu } => Ok(CriticalSet::Single {
            z_crit: (mu * mu / (sigma * sigma) - 2.0 * log_k) / (2.0 * mu / sigma),
        }),
        AnalysisPriorSpec::PointTwoSided { mu, tau } => {
            let m = -mu * sigma / (tau * tau);
            let x = (mu * mu / (tau * tau) + (tau * tau / (sigma * sigma)).ln_1p() - 2.0 * log_k)
                * (1.0 + (sigma * sigma) / (tau * tau));
            if x > 0.0 {
                Ok(CriticalSet::Pair {
                    boundary: TwoSidedBoundary::new(m, x),
                })
            } else {
                Ok(CriticalSet::Unattainable {
                    reason: format!("k = {k} exceeds the maximum Bayes factor (X = {x})"),
                })
            }
        }
        AnalysisPriorSpec::PointDirectional { .. } => {
            // Strictly decreasing in z, so the root is unique when bracketed.
            let g = |z: f64| log_bf01_z(&ZObservation { z, sigma }, spec).map(|v| v - log_k);
            let tol = Tolerance {
                abs_tol: 1e-12,
                rel_tol: 0.0,
                max_iter: 200,
            };
            for half_width in [10.0, 40.0] {
                let (lo, hi) = (-half_width, half_width);
                let (g_lo, g_hi) = (g(lo)?, g(hi)?);
                if g_lo.signum() != g_hi.signum() {
                    let z_crit = try_find_root(g, lo, hi, &tol)?;
                    return Ok(CriticalSet::Single { z_crit });
                }
            }
            Ok(CriticalSet::Unattainable {
                reason: format!("no crossing of k = {k} for z in [-40, 40]"),
            })
        }
        AnalysisPriorSpec::InformedT(_) => Err(not_z_family()),
    }
}
