//! Shared numerical kernels: adaptive Simpson quadrature, Gauss-Legendre
//! panels, safeguarded inversion of increasing functions, and a least-squares
//! line fit.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// The error estimate is the classical `(S_half - S_whole) / 15` refinement
/// test applied recursively; `rel_tol` is measured against the accumulated
/// integral magnitude, with a small absolute floor so integrals near zero
/// terminate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let scale = whole.abs().max(1e-300);
    simpson_rec(f, a, b, fa, fm, fb, whole, rel_tol * scale, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

const GL_ORDER: usize = 16;

/// Nodes and weights of the 16-point Gauss-Legendre rule on `[-1, 1]`,
/// computed once by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_16() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static TABLE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n {
            // Chebyshev-style initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_deriv(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_deriv(n, x);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite 16-point Gauss-Legendre over `panels` equal panels of `[a, b]`.
pub fn integrate_gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre_16();
    let panels = panels.max(1);
    let len = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * len;
        let half = 0.5 * len;
        let mid = lo + half;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Solves `g(t) = y` for an increasing `g` with `g(0) = 0`, `y >= 0`.
///
/// Brackets by doubling, then runs safeguarded Newton (falls back to
/// bisection whenever the Newton step leaves the bracket). `dg` must be the
/// derivative of `g`. Accuracy target: `|g(t) - y| <= tol_rel * max(1, y)`.
pub fn invert_increasing<F, D>(g: &F, dg: &D, y: f64, tol_rel: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !y.is_finite() || y < 0.0 {
        return Err(Error::Domain(format!("inverse target must be finite nonnegative, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let tol = tol_rel * y.max(1.0);
    let mut hi = 1.0_f64;
    let mut lo = 0.0_f64;
    let mut ghi = g(hi);
    let mut iter = 0;
    while ghi < y {
        lo = hi;
        hi *= 2.0;
        ghi = g(hi);
        iter += 1;
        if iter > 2100 || !hi.is_finite() {
            return Err(Error::Numerical(format!("failed to bracket inverse at y = {y}")));
        }
    }
    let mut t = 0.5 * (lo + hi);
    let mut step = t;
    for _ in 0..200 {
        let gt = g(t);
        let err = gt - y;
        // converge in the argument too, so round trips through steep g stay
        // accurate at small t
        if err.abs() <= tol && step.abs() <= 1e-11 * t.max(1e-300) {
            return Ok(t);
        }
        if err > 0.0 {
            hi = t;
        } else if err < 0.0 {
            lo = t;
        } else {
            return Ok(t);
        }
        let d = dg(t);
        let newton = t - err / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        step = next - t;
        t = next;
        if step == 0.0 {
            break;
        }
    }
    Ok(t)
}

/// Ordinary least-squares line fit. Returns `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("line fit needs at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Domain("degenerate abscissa in line fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, intercept, r2))
}

/// Kahan-compensated sum, used by tests as an independent summation route.
pub fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
