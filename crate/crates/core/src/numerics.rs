//! Scalar solvers: bracketing root finding, convex minimization on an
//! interval, Lambert W on the principal branch, and the inverse of
//! `(1+s)ln(1+s) − s`.

use std::f64::consts::E;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            abs_tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl SolverSettings {
    /// Settings that bisect down to adjacent floating-point values.
    pub fn exact() -> Self {
        SolverSettings {
            abs_tol: f64::MIN_POSITIVE,
            max_iter: 2100,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidArgument(format!(
                "solver settings need abs_tol > 0 and max_iter >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Root of a monotone `f` on `[lo, hi]` by bisection.
///
/// Stops when the bracket is narrower than `abs_tol` or cannot be split any
/// further in floating point.
pub fn bisect_root<F>(mut f: F, lo: f64, hi: f64, settings: SolverSettings) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    settings.check()?;
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        if f_lo.abs() <= settings.abs_tol {
            return Ok(lo);
        }
        if f_hi.abs() <= settings.abs_tol {
            return Ok(hi);
        }
        return Err(Error::NotBracketed { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..settings.max_iter {
        let mid = lo + (hi - lo) / 2.0;
        if hi - lo < settings.abs_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iter,
    })
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is true
/// on a prefix of the interval. `pred(lo)` is assumed.
pub fn bisect_last_true<F>(mut pred: F, lo: f64, hi: f64, settings: SolverSettings) -> f64
where
    F: FnMut(f64) -> bool,
{
    if pred(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..settings.max_iter {
        let mid = lo + (hi - lo) / 2.0;
        if hi - lo < settings.abs_tol || mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Minimizer of a convex function on `[lo, hi]` given its derivative.
pub fn minimize_convex_with_derivative<D>(
    mut deriv: D,
    lo: f64,
    hi: f64,
    settings: SolverSettings,
) -> Result<f64>
where
    D: FnMut(f64) -> f64,
{
    if deriv(lo) >= 0.0 {
        return Ok(lo);
    }
    if deriv(hi) <= 0.0 {
        return Ok(hi);
    }
    bisect_root(deriv, lo, hi, settings)
}

/// Minimizer of a convex `g` on `[lo, hi]` and the value there.
///
/// Bisects a central finite-difference derivative with step
/// `max(1e-7, 1e-7|x|)` (one-sided at the ends); falls back to golden-section
/// search when the derivative gives no usable bracket.
pub fn minimize_convex_scalar<G>(mut g: G, lo: f64, hi: f64, settings: SolverSettings) -> Result<(f64, f64)>
where
    G: FnMut(f64) -> f64,
{
    settings.check()?;
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok((lo, g(lo)));
    }
    let d = |g: &mut G, x: f64| {
        let h = (1e-7f64).max(1e-7 * x.abs()).min((hi - lo) / 4.0);
        let a = (x - h).max(lo);
        let b = (x + h).min(hi);
        (g(b) - g(a)) / (b - a)
    };
    let d_lo = d(&mut g, lo);
    let d_hi = d(&mut g, hi);
    let x = if !(d_lo.is_finite() && d_hi.is_finite()) {
        golden_section(&mut g, lo, hi, settings)?.0
    } else if d_lo >= 0.0 {
        lo
    } else if d_hi <= 0.0 {
        hi
    } else {
        match bisect_root(|x| d(&mut g, x), lo, hi, settings) {
            Ok(x) => x,
            Err(_) => golden_section(&mut g, lo, hi, settings)?.0,
        }
    };
    // Guard against finite-difference noise at flat optima.
    let mut best = (x, g(x));
    for end in [lo, hi] {
        let v = g(end);
        if v < best.1 {
            best = (end, v);
        }
    }
    Ok(best)
}

/// Golden-section search for the minimum of a unimodal `g` on `[lo, hi]`.
pub fn golden_section<G>(mut g: G, lo: f64, hi: f64, settings: SolverSettings) -> Result<(f64, f64)>
where
    G: FnMut(f64) -> f64,
{
    settings.check()?;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..settings.max_iter {
        if b - a < settings.abs_tol {
            let x = (a + b) / 2.0;
            return Ok((x, g(x)));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    if b - a < 1e3 * settings.abs_tol.max(f64::EPSILON * b.abs().max(1.0)) {
        let x = (a + b) / 2.0;
        return Ok((x, g(x)));
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iter,
    })
}

/// Principal branch of the Lambert W function: `w e^w = x`, `w ≥ −1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch - 4.0 * f64::EPSILON {
        return Err(Error::LambertDomain(x));
    }
    if x <= branch {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x > 10.0 {
        // Newton on w + ln w = ln x; avoids overflowing e^w.
        let lx = x.ln();
        let mut w = lx - lx.ln() + lx.ln() / lx;
        for _ in 0..50 {
            let step = (w + w.ln() - lx) / (1.0 + 1.0 / w);
            w -= step;
            if step.abs() <= 4.0 * f64::EPSILON * w {
                break;
            }
        }
        return Ok(w);
    }
    let mut w = if x < -0.25 {
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l = x.ln_1p();
        l * (1.0 - (l.ln_1p()) / (2.0 + l))
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 || f == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// `(1+s)ln(1+s) − s`, the excess over the linear term.
pub fn entropy_excess(s: f64) -> f64 {
    if s.abs() < 1e-4 {
        // Series keeps relative accuracy where the direct form cancels.
        let s2 = s * s;
        s2 / 2.0 - s2 * s / 6.0 + s2 * s2 / 12.0 - s2 * s2 * s / 20.0
    } else {
        (1.0 + s) * s.ln_1p() - s
    }
}

/// Root `s ≥ 0` of `(1+s)ln(1+s) − s = c` by bisection.
pub fn solve_entropy_root(c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("entropy root needs c >= 0, got {c}")));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while entropy_excess(hi) < c {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("entropy root of {c} overflows")));
        }
    }
    bisect_root(|s| entropy_excess(s) - c, 0.0, hi, SolverSettings::exact())
}

/// Closed form of [`solve_entropy_root`]: `s = exp(W((c−1)/e) + 1) − 1`.
pub fn entropy_root_lambert(c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("entropy root needs c >= 0, got {c}")));
    }
    if c < 1e-6 {
        // W is ill-conditioned at the branch point; invert the series instead.
        // c = s²/2 − s³/6 + s⁴/12 − …  ⇒  s = √(2c)(1 + √(2c)/6 + …).
        let r = (2.0 * c).sqrt();
        return Ok(r + r * r / 6.0 - r * r * r / 72.0);
    }
    Ok((lambert_w0((c - 1.0) / E)? + 1.0).exp_m1())
}
