use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::numerics::{
    nct_pdf, t_cdf, t_pdf, try_find_root, try_integrate_1d_with_points, Tolerance,
};

use super::{check_threshold, BfError, CriticalSet, TwoSidedBoundary};

/// Location-scale t prior `T_kappa(mu, tau)` on the standardised effect,
/// truncated to `[a, b]`. Unbounded ends serialise as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InformedT {
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    #[serde(with = "lower_bound", default = "neg_inf")]
    pub a: f64,
    #[serde(with = "upper_bound", default = "pos_inf")]
    pub b: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

macro_rules! bound_serde {
    ($name:ident, $missing:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                if v.is_finite() {
                    s.serialize_some(v)
                } else {
                    s.serialize_none()
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($missing))
            }
        }
    };
}

bound_serde!(lower_bound, f64::NEG_INFINITY);
bound_serde!(upper_bound, f64::INFINITY);

/// Prior mass below which a truncation is rejected.
const MIN_MASS: f64 = 1e-12;

impl InformedT {
    /// Cauchy prior with scale `1/√2` on the whole real line.
    pub fn jzs() -> Self {
        Self {
            mu: 0.0,
            tau: FRAC_1_SQRT_2,
            kappa: 1.0,
            a: f64::NEG_INFINITY,
            b: f64::INFINITY,
        }
    }

    /// The JZS prior restricted to positive effects.
    pub fn jzs_one_sided() -> Self {
        Self {
            a: 0.0,
            ..Self::jzs()
        }
    }

    pub fn validate(&self) -> Result<(), BfError> {
        if !self.mu.is_finite() {
            return Err(BfError::InvalidSpec(format!(
                "mu must be finite, got {}",
                self.mu
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(BfError::InvalidSpec(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(BfError::InvalidSpec(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if self.a.is_nan() || self.b.is_nan() || self.a >= self.b {
            return Err(BfError::InvalidSpec(format!(
                "truncation requires a < b, got [{}, {}]",
                self.a, self.b
            )));
        }
        let mass = self.mass()?;
        if mass < MIN_MASS {
            return Err(BfError::InvalidSpec(format!(
                "prior mass on [{}, {}] is {mass:e}, below {MIN_MASS:e}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// Prior probability of `[a, b]` before truncation.
    fn mass(&self) -> Result<f64, BfError> {
        let lo = (self.a - self.mu) / self.tau;
        let hi = (self.b - self.mu) / self.tau;
        // Work in the tail the interval lies in.
        Ok(if lo > 0.0 {
            t_cdf(-lo, self.kappa)? - t_cdf(-hi, self.kappa)?
        } else {
            t_cdf(hi, self.kappa)? - t_cdf(lo, self.kappa)?
        })
    }

    /// Truncated prior density at `theta`.
    pub fn density(&self, theta: f64) -> Result<f64, BfError> {
        if theta < self.a || theta > self.b {
            return Ok(0.0);
        }
        Ok(t_pdf((theta - self.mu) / self.tau, self.kappa)? / (self.tau * self.mass()?))
    }

    /// Prior symmetric about zero on a symmetric support, which makes the
    /// Bayes factor even in `t`.
    pub fn is_symmetric(&self) -> bool {
        self.mu == 0.0 && self.a == -self.b
    }

    pub fn describe(&self) -> String {
        let support = match (self.a.is_finite(), self.b.is_finite()) {
            (false, false) => String::new(),
            (true, false) if self.a == 0.0 => "_+".to_string(),
            (false, true) if self.b == 0.0 => "_-".to_string(),
            _ => format!("_[{}, {}]", self.a, self.b),
        };
        format!(
            "SMD|H1 ~ t(location = {}, scale = {:.4}, df = {}){}",
            self.mu, self.tau, self.kappa, support
        )
    }
}

fn check_sample(n_eff: f64, df: f64) -> Result<(), BfError> {
    if !(n_eff > 0.0) || !n_eff.is_finite() {
        return Err(BfError::InvalidArgument(format!(
            "effective sample size must be positive, got {n_eff}"
        )));
    }
    if !(df > 0.0) || !df.is_finite() {
        return Err(BfError::InvalidArgument(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    Ok(())
}

/// `ln BF01` of the informed t-test at the observed statistic `t`.
pub fn log_bf01_t(t: f64, n_eff: f64, df: f64, spec: &InformedT) -> Result<f64, BfError> {
    check_sample(n_eff, df)?;
    spec.validate()?;
    if !t.is_finite() {
        return Err(BfError::InvalidArgument(format!(
            "t must be finite, got {t}"
        )));
    }
    let sqrt_n = n_eff.sqrt();
    let norm = spec.tau * spec.mass()?;
    let integrand = |theta: f64| -> Result<f64, BfError> {
        let prior = t_pdf((theta - spec.mu) / spec.tau, spec.kappa)? / norm;
        if prior == 0.0 {
            return Ok(0.0);
        }
        Ok(nct_pdf(t, df, theta * sqrt_n)? * prior)
    };

    // Break points at the prior's scales and around the likelihood peak in θ.
    let (mu, tau) = (spec.mu, spec.tau);
    let peak = t / sqrt_n;
    let width = (1.0 + t * t / (2.0 * df)).sqrt() / sqrt_n;
    let mut points = vec![mu, peak];
    for s in [1.0, 10.0, 100.0] {
        points.push(mu - s * tau);
        points.push(mu + s * tau);
    }
    for s in [1.0, 3.0, 6.0, 10.0] {
        points.push(peak - s * width);
        points.push(peak + s * width);
    }
    let tol = Tolerance {
        abs_tol: f64::MIN_POSITIVE,
        rel_tol: 1e-10,
        max_iter: 500,
    };
    let marginal = try_integrate_1d_with_points(integrand, spec.a, spec.b, &points, &tol).or_else(
        |e| match e {
            BfError::Numerics {
                source: crate::numerics::NumericsError::QuadratureNonConvergence { best },
                ..
            } if best.err_est <= 1e-8 * best.value => Ok(best),
            BfError::Numerics { source, .. } => Err(BfError::Numerics {
                context: format!("marginal likelihood at t = {t}, n_eff = {n_eff}, df = {df}"),
                source,
            }),
            other => Err(other),
        },
    )?;
    if !(marginal.value > 0.0) {
        return Err(BfError::InvalidArgument(format!(
            "marginal likelihood under H1 vanishes at t = {t}"
        )));
    }
    Ok(t_pdf(t, df)?.ln() - marginal.value.ln())
}

/// Informed t-test Bayes factor `BF01`.
pub fn bf01_t(t: f64, n_eff: f64, df: f64, spec: &InformedT) -> Result<f64, BfError> {
    log_bf01_t(t, n_eff, df, spec).map(f64::exp)
}

const MAX_T: f64 = 64.0;

/// The t-values at which `BF01 = k`.
///
/// Priors supported on one side of zero give a monotone Bayes factor and
/// hence at most one root; symmetric priors give a pair `±t`. Otherwise the
/// range `[-64, 64]` is scanned for crossings, finely within `|t| <= 8`.
pub fn critical_t(k: f64, n_eff: f64, df: f64, spec: &InformedT) -> Result<CriticalSet, BfError> {
    let log_k = check_threshold(k)?;
    check_sample(n_eff, df)?;
    spec.validate()?;
    let g = |t: f64| log_bf01_t(t, n_eff, df, spec).map(|v| v - log_k);
    let tol = Tolerance {
        abs_tol: 1e-10,
        rel_tol: 0.0,
        max_iter: 200,
    };

    if spec.a >= 0.0 || spec.b <= 0.0 || spec.is_symmetric() {
        // Monotone on the searched half-line: march outwards from zero.
        let g0 = g(0.0)?;
        if g0 == 0.0 {
            return Ok(if spec.is_symmetric() {
                CriticalSet::Unattainable {
                    reason: "k equals the maximum Bayes factor at t = 0".to_string(),
                }
            } else {
                CriticalSet::Single { z_crit: 0.0 }
            });
        }
        let direction = if spec.is_symmetric() {
            1.0
        } else {
            // BF decreasing in t for positive support, increasing for negative.
            let decreasing = spec.a >= 0.0;
            if (g0 > 0.0) == decreasing {
                1.0
            } else {
                -1.0
            }
        };
        let mut inner = 0.0;
        let mut step = 1.0;
        while step <= MAX_T {
            let outer = direction * step;
            let g_out = g(outer)?;
            if g_out.signum() != g0.signum() {
                let root = try_find_root(g, inner, outer, &tol)?;
                return Ok(if spec.is_symmetric() {
                    CriticalSet::Pair {
                        boundary: TwoSidedBoundary::from_roots(-root, root),
                    }
                } else {
                    CriticalSet::Single { z_crit: root }
                });
            }
            inner = outer;
            step *= 2.0;
        }
        return Ok(CriticalSet::Unattainable {
            reason: format!(
                "BF01 does not cross k = {k} for |t| <= {MAX_T} (ln BF01 - ln k = {g0:.3e} at t = 0)"
            ),
        });
    }

    // Fine near zero, geometric in the tails out to ±MAX_T.
    let mut tail = Vec::new();
    let mut t = 8.0;
    while t < MAX_T {
        t = (t * 1.25f64).min(MAX_T);
        tail.push(t);
    }
    let grid: Vec<f64> = tail
        .iter()
        .rev()
        .map(|t| -t)
        .chain((-32..=32).map(|i| i as f64 * 0.25))
        .chain(tail.iter().copied())
        .collect();
    let values = grid.iter().map(|&t| g(t)).collect::<Result<Vec<_>, _>>()?;
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        if values[i] == 0.0 {
            roots.push(grid[i]);
        } else if values[i].signum() != values[i + 1].signum() && values[i + 1] != 0.0 {
            roots.push(try_find_root(g, grid[i], grid[i + 1], &tol)?);
        }
    }
    match roots.as_slice() {
        [] => Ok(CriticalSet::Unattainable {
            reason: format!("BF01 does not cross k = {k} for |t| <= {MAX_T}"),
        }),
        [r] => Ok(CriticalSet::Single { z_crit: *r }),
        [lo, hi] => Ok(CriticalSet::Pair {
            boundary: TwoSidedBoundary::from_roots(*lo, *hi),
        }),
        _ => Err(BfError::InvalidSpec(format!(
            "BF01 crosses k = {k} more than twice; unsupported prior shape"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_1d;
    use proptest::prelude::*;

    // Trapezoid rule on a uniform grid in θ. The non-central t density is
    // itself a trapezoid sum over s = sqrt(V / df), V ~ χ²(df).
    fn trapezoid_bf01(t: f64, n: f64, df: f64, spec: &InformedT) -> f64 {
        let ln_gamma = statrs::function::gamma::ln_gamma;
        let log_const = (1.0 - df / 2.0) * 2f64.ln() - ln_gamma(df / 2.0) + 0.5 * df * df.ln();
        let nct = |lambda: f64| {
            let h = 2e-3;
            let mut acc = 0.0;
            for i in 1..3000 {
                let s = i as f64 * h;
                let log_g = log_const + (df - 1.0) * s.ln() - 0.5 * df * s * s;
                let phi =
                    (-0.5 * (t * s - lambda).powi(2)).exp() / (2.0 * std::f64::consts::PI).sqrt();
                acc += s * phi * log_g.exp() * h;
            }
            acc
        };
        let mass = {
            let c = |x: f64| t_cdf((x - spec.mu) / spec.tau, spec.kappa).unwrap();
            c(spec.b) - c(spec.a)
        };
        // The likelihood is negligible once |θ√n - t| exceeds 12 + |t|.
        let reach = (12.0 + 2.0 * t.abs()) / n.sqrt();
        let lo = spec.a.max(-reach);
        let hi = spec.b.min(reach);
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for i in 0..=steps {
            let theta = lo + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let prior =
                t_pdf((theta - spec.mu) / spec.tau, spec.kappa).unwrap() / (spec.tau * mass);
            acc += w * prior * nct(theta * n.sqrt());
        }
        t_pdf(t, df).unwrap() / (acc * h)
    }

    #[test]
    fn jzs_matches_trapezoid_oracle() {
        let spec = InformedT::jzs();
        let got = bf01_t(2.5, 15.0, 58.0, &spec).unwrap();
        let oracle = trapezoid_bf01(2.5, 15.0, 58.0, &spec);
        assert!(((got - oracle) / oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn collapsed_prior_gives_unit_bayes_factor() {
        let spec = InformedT {
            tau: 1e-6,
            ..InformedT::jzs()
        };
        for &t in &[-2.0, 0.0, 1.3, 3.0] {
            let v = bf01_t(t, 20.0, 38.0, &spec).unwrap();
            assert!((v - 1.0).abs() < 1e-3, "t {t}: {v}");
        }
    }

    #[test]
    fn one_sided_penalises_negative_t() {
        let spec = InformedT::jzs_one_sided();
        let neg = bf01_t(-2.0, 15.0, 58.0, &spec).unwrap();
        let pos = bf01_t(2.0, 15.0, 58.0, &spec).unwrap();
        assert!(neg > pos);
    }

    #[test]
    fn symmetric_prior_gives_even_bayes_factor() {
        let spec = InformedT::jzs();
        for &t in &[0.4, 1.7, 3.9] {
            let a = bf01_t(t, 25.0, 48.0, &spec).unwrap();
            let b = bf01_t(-t, 25.0, 48.0, &spec).unwrap();
            assert!(((a - b) / a).abs() < 1e-10);
        }
    }

    #[test]
    fn truncated_density_normalised() {
        let spec = InformedT {
            mu: 0.3,
            tau: 0.5,
            kappa: 3.0,
            a: 0.0,
            b: 2.0,
        };
        let total = integrate_1d(
            |x| spec.density(x).unwrap(),
            0.0,
            2.0,
            &Tolerance::quadrature(),
        )
        .unwrap();
        assert!((total.value - 1.0).abs() < 1e-10);
        assert_eq!(spec.density(-0.1).unwrap(), 0.0);
    }

    #[test]
    fn negligible_truncation_mass_rejected() {
        let spec = InformedT {
            mu: 0.0,
            tau: 0.01,
            kappa: 30.0,
            a: 5.0,
            b: f64::INFINITY,
        };
        assert!(matches!(spec.validate(), Err(BfError::InvalidSpec(_))));
    }

    #[test]
    fn symmetric_jzs_unattainable_above_maximum() {
        let spec = InformedT::jzs();
        let max = bf01_t(0.0, 20.0, 38.0, &spec).unwrap();
        assert!(matches!(
            critical_t(max * 1.05, 20.0, 38.0, &spec).unwrap(),
            CriticalSet::Unattainable { .. }
        ));
        let CriticalSet::Pair { boundary } = critical_t(max * 0.5, 20.0, 38.0, &spec).unwrap()
        else {
            panic!("expected a pair");
        };
        assert!((boundary.z_minus + boundary.z_plus).abs() < 1e-12);
    }

    #[test]
    fn one_sided_round_trip_examples() {
        let spec = InformedT::jzs_one_sided();
        for &k in &[6.0, 1.0, 0.1, 1.0 / 30.0] {
            let set = critical_t(k, 20.0, 38.0, &spec).unwrap();
            let CriticalSet::Single { z_crit } = set else {
                panic!("k {k}: expected a single root, got {set:?}");
            };
            let back = bf01_t(z_crit, 20.0, 38.0, &spec).unwrap();
            assert!(((back - k) / k).abs() < 1e-6, "k {k}: {back}");
        }
    }

    #[test]
    fn probe_is_recovered() {
        let spec = InformedT {
            mu: 0.2,
            tau: 0.4,
            kappa: 5.0,
            a: f64::NEG_INFINITY,
            b: f64::INFINITY,
        };
        let t0 = 1.3;
        let k = bf01_t(t0, 30.0, 58.0, &spec).unwrap();
        let roots = critical_t(k, 30.0, 58.0, &spec).unwrap().roots();
        assert!(roots.iter().any(|r| (r - t0).abs() < 1e-6), "{roots:?}");
    }

    #[test]
    fn appendix_a_critical_values() {
        // Per-group n = 20, 40, ..., 100 in a two-sample design.
        let spec = InformedT::jzs_one_sided();
        let h1 = [2.7203, 2.6936, 2.7076, 2.7266, 2.7455];
        let h0 = [-1.0949, -0.4980, -0.2130, -0.0305, 0.1015];
        for (j, n) in [20.0, 40.0, 60.0, 80.0, 100.0].into_iter().enumerate() {
            let (n_eff, df) = (n / 2.0, 2.0 * n - 2.0);
            let r1 = critical_t(0.1, n_eff, df, &spec).unwrap().roots();
            let r0 = critical_t(6.0, n_eff, df, &spec).unwrap().roots();
            assert!((r1[0] - h1[j]).abs() < 1e-3, "stage {j}: {r1:?}");
            assert!((r0[0] - h0[j]).abs() < 1e-3, "stage {j}: {r0:?}");
        }
    }

    fn informed_spec() -> impl Strategy<Value = InformedT> {
        (
            -0.5..0.5f64,
            0.2..1.5f64,
            prop::sample::select(vec![1.0, 3.0, 10.0]),
            0..3usize,
        )
            .prop_map(|(mu, tau, kappa, support)| match support {
                0 => InformedT {
                    mu,
                    tau,
                    kappa,
                    a: 0.0,
                    b: f64::INFINITY,
                },
                1 => InformedT {
                    mu,
                    tau,
                    kappa,
                    a: f64::NEG_INFINITY,
                    b: 0.0,
                },
                _ => InformedT {
                    mu: 0.0,
                    tau,
                    kappa,
                    a: f64::NEG_INFINITY,
                    b: f64::INFINITY,
                },
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn critical_t_round_trip(
            spec in informed_spec(),
            n in 10.0..60.0f64,
            log_k in -3.4..1.8f64,
        ) {
            let df = 2.0 * n - 2.0;
            let n_eff = n / 2.0;
            let k = log_k.exp();
            for t in critical_t(k, n_eff, df, &spec).unwrap().roots() {
                let back = log_bf01_t(t, n_eff, df, &spec).unwrap();
                prop_assert!((back - log_k).abs() < 1e-6, "t {t}: {back} vs {log_k}");
            }
        }
    }
}
