//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! Infinite ends are mapped onto [0, 1) by `x = a + u/(1 - u)` (mirrored
//! for a lower tail). Interior break points seed the initial panel list, and
//! the panel with the largest error is bisected until the summed error meets
//! the tolerance.

use super::{Estimate, NumericsError, Tolerance};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    UpperTail(f64),
    LowerTail(f64),
}

impl Map {
    /// Returns `(x, dx/du)`.
    fn apply(self, u: f64) -> (f64, f64) {
        match self {
            Map::Identity => (u, 1.0),
            Map::UpperTail(a) => {
                let v = 1.0 - u;
                (a + u / v, 1.0 / (v * v))
            }
            Map::LowerTail(b) => {
                let v = 1.0 - u;
                (b - u / v, 1.0 / (v * v))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    err: f64,
}

fn gauss_kronrod<F, E>(f: &F, lo: f64, hi: f64, map: Map) -> Result<Panel, E>
where
    F: Fn(f64) -> Result<f64, E>,
    E: From<NumericsError>,
{
    let eval = |u: f64| -> Result<f64, E> {
        let (x, jac) = map.apply(u);
        let y = f(x)?;
        if !y.is_finite() {
            return Err(NumericsError::NonFiniteIntegrand { x }.into());
        }
        Ok(y * jac)
    };

    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = eval(center)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = res_k * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        lo,
        hi,
        map,
        value,
        err,
    })
}

/// Integrate a fallible integrand over `[a, b]`, seeding panels at `points`.
pub fn try_integrate_1d_with_points<F, E>(
    f: F,
    a: f64,
    b: f64,
    points: &[f64],
    tol: &Tolerance,
) -> Result<Estimate, E>
where
    F: Fn(f64) -> Result<f64, E>,
    E: From<NumericsError>,
{
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(NumericsError::InvalidInterval { a, b }.into());
    }
    let mut cuts: Vec<f64> = points
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > a && *p < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    if a.is_infinite() && b.is_infinite() && cuts.is_empty() {
        cuts.push(0.0);
    }
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut panels = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let panel = if lo.is_infinite() {
            gauss_kronrod(&f, 0.0, 1.0, Map::LowerTail(hi))?
        } else if hi.is_infinite() {
            gauss_kronrod(&f, 0.0, 1.0, Map::UpperTail(lo))?
        } else {
            gauss_kronrod(&f, lo, hi, Map::Identity)?
        };
        panels.push(panel);
    }

    let mut iterations = 0;
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if err <= tol.target(value) {
            return Ok(Estimate {
                value,
                err_est: err,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .map(|(i, _)| i)
            .expect("at least one panel");
        let p = panels[worst];
        let mid = 0.5 * (p.lo + p.hi);
        if iterations >= tol.max_iter || mid <= p.lo || mid >= p.hi {
            return Err(NumericsError::QuadratureNonConvergence {
                best: Estimate {
                    value,
                    err_est: err,
                },
            }
            .into());
        }
        iterations += 1;
        let left = gauss_kronrod(&f, p.lo, mid, p.map)?;
        let right = gauss_kronrod(&f, mid, p.hi, p.map)?;
        panels[worst] = left;
        panels.push(right);
    }
}

/// Integrate `f` over `[a, b]`; either end may be infinite.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate, NumericsError>
where
    F: Fn(f64) -> f64,
{
    try_integrate_1d_with_points(|x| Ok(f(x)), a, b, &[], tol)
}

/// As [`integrate_1d`], with interior break points where `f` has features.
pub fn integrate_1d_with_points<F>(
    f: F,
    a: f64,
    b: f64,
    points: &[f64],
    tol: &Tolerance,
) -> Result<Estimate, NumericsError>
where
    F: Fn(f64) -> f64,
{
    try_integrate_1d_with_points(|x| Ok(f(x)), a, b, points, tol)
}
