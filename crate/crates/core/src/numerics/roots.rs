use super::{NumericsError, Tolerance};

/// Brent's method on a fallible function.
///
/// The bracket is normalised to `lo < hi` before iterating, so swapping the
/// endpoints yields the identical result.
pub fn try_find_root<F, E>(mut f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<NumericsError>,
{
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut eval = |x: f64| -> Result<f64, E> {
        let y = f(x)?;
        if y.is_nan() {
            return Err(NumericsError::NonFiniteFunction { x }.into());
        }
        Ok(y)
    };

    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        }
        .into());
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.abs_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0)),
                    (qa - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = eval(b)?;
    }
    let (l, h) = if b < c { (b, c) } else { (c, b) };
    Err(NumericsError::RootNonConvergence { lo: l, hi: h }.into())
}

/// Root of `f` inside a sign-changing bracket.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    try_find_root(|x| Ok(f(x)), lo, hi, tol)
}
