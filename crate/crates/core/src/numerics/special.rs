use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use libm::erfc;
use statrs::function::{beta::beta_reg, gamma::ln_gamma};

use super::{integrate_1d_with_points, NumericsError, Tolerance};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal distribution function, total on the extended reals.
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

/// `ln Φ(x)`, accurate far into the lower tail where `Φ` underflows.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > 5.0 {
        (-norm_cdf(-x)).ln_1p()
    } else if x > -35.0 {
        norm_cdf(x).ln()
    } else if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        // Mills-ratio asymptotic series; at |x| >= 35 five terms are exact to rounding.
        let r = 1.0 / (x * x);
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
        -0.5 * x * x - (-x).ln() - LN_SQRT_2PI + series.ln()
    }
}

// Wichura's AS241 (PPND16) coefficients.
const A: [f64; 8] = [
    3.387_132_872_796_366_6,
    133.141_667_891_784_38,
    1_971.590_950_306_551_3,
    13_731.693_765_509_461,
    45_921.953_931_549_87,
    67_265.770_927_008_7,
    33_430.575_583_588_13,
    2_509.080_928_730_122_7,
];
const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_91,
    687.187_007_492_057_9,
    5_394.196_021_424_751,
    21_213.794_301_586_597,
    39_307.895_800_092_71,
    28_729.085_735_721_943,
    5_226.495_278_852_545,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_6,
    4.630_337_846_156_545,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    0.241_780_725_177_450_6,
    0.022_723_844_989_269_184,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    0.689_767_334_985_1,
    0.148_103_976_427_480_07,
    0.015_198_666_563_616_457,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_8e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    0.296_560_571_828_504_9,
    0.026_532_189_526_576_124,
    0.001_242_660_947_388_078_4,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_9,
    0.136_929_880_922_735_8,
    0.014_875_361_290_850_615,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// AS241 without refinement; `p` must lie in (0, 1).
pub(crate) fn norm_quantile_fast(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let v = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

/// Standard normal quantile: AS241 followed by one Newton step.
pub fn norm_quantile(p: f64) -> Result<f64, NumericsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(NumericsError::Domain(format!(
            "quantile requires 0 < p < 1, got {p}"
        )));
    }
    let mut x = norm_quantile_fast(p);
    // Residual taken in whichever tail keeps full relative precision.
    let residual = if x < 0.0 {
        norm_cdf(x) - p
    } else {
        (1.0 - p) - norm_cdf(-x)
    };
    let density = norm_pdf(x);
    if density > 0.0 {
        x -= residual / density;
    }
    Ok(x)
}

/// Remainder of Stirling's series, `ln Γ(y) - (y - 1/2) ln y + y - ln √(2π)`.
fn stirling_error(y: f64) -> f64 {
    if y < 15.0 {
        ln_gamma(y) - (y - 0.5) * y.ln() + y - LN_SQRT_2PI
    } else {
        let r = 1.0 / y;
        let r2 = r * r;
        r * (1.0 / 12.0
            - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
    }
}

/// `ln Γ(y + 1/2) - ln Γ(y)` without the cancellation of two large log-gammas.
fn ln_gamma_half_ratio(y: f64) -> f64 {
    if y < 15.0 {
        ln_gamma(y + 0.5) - ln_gamma(y)
    } else {
        y * (0.5 / y).ln_1p() + 0.5 * y.ln() - 0.5 + stirling_error(y + 0.5) - stirling_error(y)
    }
}

fn check_df(df: f64) -> Result<(), NumericsError> {
    if df > 0.0 && !df.is_nan() {
        Ok(())
    } else {
        Err(NumericsError::Domain(format!(
            "degrees of freedom must be positive, got {df}"
        )))
    }
}

/// Density of Student's t with `df` degrees of freedom.
pub fn t_pdf(x: f64, df: f64) -> Result<f64, NumericsError> {
    check_df(df)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    let log_norm = ln_gamma_half_ratio(0.5 * df) - 0.5 * (df * PI).ln();
    Ok((log_norm - 0.5 * (df + 1.0) * (x * x / df).ln_1p()).exp())
}

/// Distribution function of Student's t with `df` degrees of freedom.
pub fn t_cdf(x: f64, df: f64) -> Result<f64, NumericsError> {
    check_df(df)?;
    if x == 0.0 {
        return Ok(0.5);
    }
    if x.is_infinite() {
        return Ok(if x > 0.0 { 1.0 } else { 0.0 });
    }
    let x2 = x * x;
    let central = x2 / (df + x2);
    if central < 0.5 {
        // Probability between -|x| and |x|.
        let inner = 0.5 * beta_reg(0.5, 0.5 * df, central);
        Ok(if x > 0.0 { 0.5 + inner } else { 0.5 - inner })
    } else {
        let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + x2));
        Ok(if x > 0.0 { 1.0 - tail } else { tail })
    }
}

/// Density of the non-central t distribution.
///
/// Evaluated as a one-dimensional integral over the chi variable
/// `s = sqrt(V / df)`, `V ~ χ²(df)`:
///
/// ```text
/// f(x) = ∫₀^∞ s φ(x s − ncp) g(s) ds
/// ```
///
/// The log-integrand is concave in `s` with curvature `df (1 + 1/s²) + x²`,
/// at least `df + x²` everywhere and at least `df / mode²` left of the mode,
/// which bounds the tails outside a window around the mode.
pub fn nct_pdf(x: f64, df: f64, ncp: f64) -> Result<f64, NumericsError> {
    check_df(df)?;
    if ncp.is_nan() || x.is_nan() {
        return Err(NumericsError::Domain("nct_pdf argument is NaN".to_string()));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let half_df = 0.5 * df;
    let log_const = LN_2 + 0.5 * half_df.ln() - LN_2PI - stirling_error(half_df);
    let log_kernel = |s: f64| {
        let d = s - 1.0;
        df * (d.ln_1p() - d - 0.5 * d * d) - 0.5 * (x * s - ncp).powi(2)
    };

    let spread = df + x * x;
    // Positive root of spread·s² − x·ncp·s − df, in the form free of cancellation.
    let b = x * ncp;
    let disc = (b * b + 4.0 * df * spread).sqrt();
    let mode = if b >= 0.0 {
        (b + disc) / (2.0 * spread)
    } else {
        2.0 * df / (disc - b)
    };
    let width = spread.sqrt().recip();
    let left = (spread + df / (mode * mode)).sqrt().recip();
    let lo = (mode - 12.0 * left).max(0.0);
    let hi = mode + 12.0 * width;
    let points: Vec<f64> = if left < 0.25 * width {
        [-3.0, 0.0, 3.0].iter().map(|k| mode + k * left).collect()
    } else {
        vec![mode]
    };
    let peak = log_kernel(mode);

    // log_kernel(s) - peak expanded in u = s - mode, so that the large
    // terms of the two kernels cancel exactly.
    let integrand = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let u = s - mode;
        let chi = df * ((u / mode).ln_1p() - u - 0.5 * u * (s + mode - 2.0));
        let normal = 0.5 * x * u * (x * (s + mode) - 2.0 * ncp);
        (chi - normal).exp()
    };
    let tol = Tolerance {
        abs_tol: 1e-15 * width,
        rel_tol: 1e-13,
        max_iter: 400,
    };
    let est = match integrate_1d_with_points(integrand, lo, hi, &points, &tol) {
        Ok(est) => est,
        // Requests near machine precision may stall on the last digits.
        Err(NumericsError::QuadratureNonConvergence { best })
            if best.err_est <= 1e-10 * best.value =>
        {
            best
        }
        Err(e) => return Err(e),
    };
    Ok(est.value * (log_const + peak).exp())
}
