//! The quasilinear flux map `Θ(X) = a(|X|) X / |X|`, the segment kernels it
//! induces, and sampling-based verifiers for the monotonicity and convexity
//! inequalities that drive the comparison estimates.

use crate::error::{Error, Result};
use crate::nfunction::NFunction;
use crate::numerics::gauss_legendre_16;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Below this fraction of the caller-supplied scale the flux is clamped to
/// zero; `a(0) = 0` makes zero the continuous extension.
pub const FLUX_FLOOR_REL: f64 = 1e-14;

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `Θ(X)` with an explicit zero-clamp scale: inputs with `|X| <= floor` map
/// to the zero vector. Computed as `a(|X|) · (X/|X|)` so small radii never
/// overflow the radial factor.
pub fn flux_with_floor(nf: &NFunction, x: &[f64], floor: f64) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("flux input has non-finite components".into()));
    }
    let r = norm(x);
    if r <= floor || r == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let a = nf.density(r);
    Ok(x.iter().map(|v| a * (v / r)).collect())
}

/// `Θ(X)` with the default floor for O(1)-scaled inputs.
pub fn flux(nf: &NFunction, x: &[f64]) -> Result<Vec<f64>> {
    flux_with_floor(nf, x, FLUX_FLOOR_REL)
}

/// Radial factor `a(r)/r`, clamped to zero at the floor. This is the scalar
/// that multiplies a gradient inside divergence-form expressions.
#[inline]
pub fn flux_scale(nf: &NFunction, r: f64, floor: f64) -> f64 {
    if r <= floor || r == 0.0 {
        0.0
    } else {
        nf.density(r) / r
    }
}

/// One monotonicity sample: both sides of the structural lower bound for
/// `(Θ(X) - Θ(Y)) · (X - Y)` and their ratio. The infimum of the ratio over
/// a sample set is the empirical monotonicity constant.
#[derive(Debug, Clone)]
pub struct FluxSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    /// `|X-Y|² a(s)/s` with `s = (|X|² + |Y|²)^{1/2}`.
    pub rhs_structural: f64,
    pub ratio: f64,
    /// Same structural form with `s = |X| + |Y|`; both norms are kept since
    /// the kernel bound is phrased with the sum norm.
    pub rhs_sum_norm: f64,
    pub ratio_sum_norm: f64,
}

pub fn monotonicity_ratio(nf: &NFunction, x: &[f64], y: &[f64]) -> Result<FluxSample> {
    if x.len() != y.len() {
        return Err(Error::Domain("monotonicity sample needs equal dimensions".into()));
    }
    if x == y {
        return Err(Error::Domain("monotonicity ratio is 0/0 at X = Y".into()));
    }
    let nx = norm(x);
    let ny = norm(y);
    if nx == 0.0 && ny == 0.0 {
        return Err(Error::Domain("monotonicity sample needs (X, Y) != (0, 0)".into()));
    }
    let tx = flux_with_floor(nf, x, 0.0)?;
    let ty = flux_with_floor(nf, y, 0.0)?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let tdiff: Vec<f64> = tx.iter().zip(&ty).map(|(a, b)| a - b).collect();
    let lhs = dot(&tdiff, &diff);
    let d2 = dot(&diff, &diff);
    let s = (nx * nx + ny * ny).sqrt();
    let rhs_structural = d2 * nf.density(s) / s;
    let s1 = nx + ny;
    let rhs_sum_norm = d2 * nf.density(s1) / s1;
    Ok(FluxSample {
        x: x.to_vec(),
        y: y.to_vec(),
        lhs,
        rhs_structural,
        ratio: lhs / rhs_structural,
        rhs_sum_norm,
        ratio_sum_norm: lhs / rhs_sum_norm,
    })
}

/// Integrates `g(|θ_t|)` over the segment `θ_t = t ξ + (1-t) ζ`, `t ∈ [0,1]`.
///
/// `sing_order` is the power `σ` such that the integrand behaves like
/// `r^σ` near `r = 0`; when the segment passes within `1e-12` of the origin
/// (relative to `|ξ| + |ζ|`) the integral is split at the closest approach
/// and each side is covered with geometrically graded panels so the
/// integrable singularity is resolved.
fn segment_integral<G: Fn(f64) -> f64>(
    xi: &[f64],
    zeta: &[f64],
    quad_points: usize,
    sing_order: f64,
    g: &G,
) -> Result<f64> {
    if xi.len() != zeta.len() {
        return Err(Error::Domain("segment endpoints need equal dimensions".into()));
    }
    if xi.iter().chain(zeta).any(|v| !v.is_finite()) {
        return Err(Error::Domain("segment endpoints must be finite".into()));
    }
    let scale = norm(xi) + norm(zeta);
    if scale == 0.0 {
        return Err(Error::Domain("segment kernel needs (ξ, ζ) != (0, 0)".into()));
    }
    let d: Vec<f64> = xi.iter().zip(zeta).map(|(a, b)| a - b).collect();
    let dn2 = dot(&d, &d);
    let radius = |t: f64| -> f64 {
        let mut acc = 0.0;
        for k in 0..d.len() {
            let v = zeta[k] + t * d[k];
            acc += v * v;
        }
        acc.sqrt()
    };
    if dn2 == 0.0 {
        // constant integrand along a degenerate segment
        return Ok(g(radius(0.0)));
    }
    let t_star = (-dot(zeta, &d) / dn2).clamp(0.0, 1.0);
    let r_min = radius(t_star);
    let panels = (quad_points / 16).max(1);
    if r_min > 1e-12 * scale {
        return Ok(integrate_panels(&|t| g(radius(t)), 0.0, 1.0, panels));
    }

    // graded split toward the closest approach; depth chosen so the skipped
    // innermost sliver contributes below 1e-12 relative for the given order
    let depth = ((40.0 / (sing_order + 1.0).max(0.05)).ceil() as usize + 40).min(4000);
    // offsets are taken from the closest-approach point so tiny radii are
    // formed as θ* + s·d rather than through a cancelling sum along t
    let theta_star: Vec<f64> = zeta.iter().zip(&d).map(|(z, dk)| z + t_star * dk).collect();
    let radius_from = |s: f64| -> f64 {
        let mut acc = 0.0;
        for k in 0..d.len() {
            let v = theta_star[k] + s * d[k];
            acc += v * v;
        }
        acc.sqrt()
    };
    let mut total = 0.0;
    for (lo, hi) in [(0.0, t_star), (t_star, 1.0)] {
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        // distances from t_star: s ∈ [len/2^depth, len], geometric panels
        let mut inner = len * 0.5f64.powi(depth as i32);
        let orient = if lo == t_star { 1.0 } else { -1.0 };
        while inner < len {
            let outer = (inner * 2.0).min(len);
            let f = |s: f64| g(radius_from(orient * s));
            total += integrate_panels(&f, inner, outer, 1);
            inner = outer;
        }
    }
    Ok(total)
}

fn integrate_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre_16();
    let len = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let half = 0.5 * len;
        let mid = a + p as f64 * len + half;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Kernel `∫₀¹ a(|θ_t|)/|θ_t| dt` along the segment from `ζ` to `ξ`.
pub fn line_kernel(nf: &NFunction, xi: &[f64], zeta: &[f64], quad_points: usize) -> Result<f64> {
    let a0 = nf.a0();
    segment_integral(xi, zeta, quad_points, a0 - 1.0, &|r| {
        if r == 0.0 {
            0.0
        } else {
            nf.density(r) / r
        }
    })
}

/// Kernel `∫₀¹ |θ_t|^{p-2} dt`; exactly 1 for `p = 2`.
pub fn power_line_kernel(p: f64, xi: &[f64], zeta: &[f64], quad_points: usize) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("power kernel needs p > 1, got {p}")));
    }
    if p == 2.0 {
        // still validate the inputs
        if norm(xi) + norm(zeta) == 0.0 {
            return Err(Error::Domain("segment kernel needs (ξ, ζ) != (0, 0)".into()));
        }
        return Ok(1.0);
    }
    segment_integral(xi, zeta, quad_points, p - 2.0, &|r| {
        if r == 0.0 {
            0.0
        } else {
            r.powf(p - 2.0)
        }
    })
}

/// Draws a sample vector with components uniform in `[-R, R]`, with the
/// magnitude `R` cycling through 0.1, 1, 10 so both small- and large-argument
/// regimes of the density are exercised.
fn sample_vector(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
    let r = [0.1, 1.0, 10.0][k % 3];
    (0..n).map(|_| rng.gen_range(-r..=r)).collect()
}

/// Deterministic adversarial endpoint pairs: axis-aligned, antiparallel
/// (segment through the origin), parallel, and strongly skewed magnitudes.
fn adversarial_pairs(n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let e = |d: usize, s: f64| -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[d] = s;
        v
    };
    let mut out = vec![
        (e(0, 1.0), e(0, -1.0)),
        (e(0, 1.0), e(1, 1.0)),
        (e(0, 2.0), e(0, 0.5)),
        (e(0, 10.0), e(1, 0.1)),
        (e(0, 1.0), vec![0.0; n]),
        (e(0, 0.3), e(0, -2.7)),
    ];
    if n > 2 {
        out.push((e(2, 1.0), e(0, -1.0)));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct BandReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
}

/// Samples the ratio of `line_kernel` to its structural envelope
/// `a(|ξ|+|ζ|)/(|ξ|+|ζ|)`; the observed extremes are the empirical band
/// constants.
pub fn line_kernel_band_scan(
    nf: &NFunction,
    n: usize,
    trials: usize,
    quad_points: usize,
    seed: u64,
) -> Result<BandReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut used = 0;
    let adv = adversarial_pairs(n);
    for k in 0..trials {
        let (xi, zeta) = if k < adv.len() {
            adv[k].clone()
        } else {
            (sample_vector(&mut rng, n, k), sample_vector(&mut rng, n, k / 3))
        };
        let s = norm(&xi) + norm(&zeta);
        if s == 0.0 {
            continue;
        }
        let g = line_kernel(nf, &xi, &zeta, quad_points)?;
        let envelope = nf.density(s) / s;
        let ratio = g / envelope;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        used += 1;
    }
    Ok(BandReport { min_ratio, max_ratio, samples: used })
}

/// Same scan for the pure power kernel against `(|ξ|²+|ζ|²)^{(p-2)/2}`.
pub fn power_kernel_band_scan(
    p: f64,
    n: usize,
    trials: usize,
    quad_points: usize,
    seed: u64,
) -> Result<BandReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut used = 0;
    let adv = adversarial_pairs(n);
    for k in 0..trials {
        let (xi, zeta) = if k < adv.len() {
            adv[k].clone()
        } else {
            (sample_vector(&mut rng, n, k), sample_vector(&mut rng, n, k / 3))
        };
        let s2 = dot(&xi, &xi) + dot(&zeta, &zeta);
        if s2 == 0.0 {
            continue;
        }
        let f = power_line_kernel(p, &xi, &zeta, quad_points)?;
        let ratio = f / s2.powf(0.5 * (p - 2.0));
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        used += 1;
    }
    Ok(BandReport { min_ratio, max_ratio, samples: used })
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub min_ratio_sum_norm: f64,
    pub samples: usize,
}

/// Empirical monotonicity constant: infimum of the sample ratio over random
/// and adversarial pairs. Degenerate draws (`X = Y`) are resampled.
pub fn monotonicity_scan(
    nf: &NFunction,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_sum = f64::INFINITY;
    let mut used = 0;
    let adv = adversarial_pairs(n);
    let mut k = 0;
    while used < trials {
        let (x, y) = if k < adv.len() {
            adv[k].clone()
        } else {
            (sample_vector(&mut rng, n, k), sample_vector(&mut rng, n, k + 1))
        };
        k += 1;
        if x == y || (norm(&x) == 0.0 && norm(&y) == 0.0) {
            continue;
        }
        let s = monotonicity_ratio(nf, &x, &y)?;
        min_ratio = min_ratio.min(s.ratio);
        max_ratio = max_ratio.max(s.ratio);
        min_sum = min_sum.min(s.ratio_sum_norm);
        used += 1;
    }
    Ok(MonotonicityReport { min_ratio, max_ratio, min_ratio_sum_norm: min_sum, samples: used })
}

#[derive(Debug, Clone)]
pub struct SlackReport {
    pub min_slack: f64,
    pub violations: Vec<(Vec<f64>, Vec<f64>, f64)>,
    pub samples: usize,
}

/// Checks the supporting-plane form of convexity,
/// `A(|X|) >= A(|Y|) + <Θ(Y), X - Y>`, with normalized slack tolerance
/// `-1e-9 (1 + A(|X|))`.
pub fn support_inequality_scan(
    nf: &NFunction,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<SlackReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    let mut violations = Vec::new();
    let adv = adversarial_pairs(n);
    for k in 0..trials {
        let (x, y) = if k < adv.len() {
            adv[k].clone()
        } else {
            (sample_vector(&mut rng, n, k), sample_vector(&mut rng, n, k + 1))
        };
        let ax = nf.eval_raw(norm(&x));
        let ay = nf.eval_raw(norm(&y));
        let ty = flux_with_floor(nf, &y, 0.0)?;
        let cross: f64 = ty.iter().zip(x.iter().zip(&y)).map(|(t, (xi, yi))| t * (xi - yi)).sum();
        let slack = (ax - ay - cross) / (1.0 + ax);
        if slack < min_slack {
            min_slack = slack;
        }
        if slack < -1e-9 && violations.len() < 16 {
            violations.push((x.clone(), y.clone(), slack));
        }
    }
    Ok(SlackReport { min_slack, violations, samples: trials })
}

#[derive(Debug, Clone)]
pub struct SplitBoundReport {
    /// Smallest leading constant that makes the split bound hold across the
    /// samples when the companion constant is fixed at its derived formula.
    pub worst_c3_needed: f64,
    /// Symmetric estimate for the companion constant with the leading one
    /// fixed at its derived formula.
    pub worst_c4_needed: f64,
    pub c3_formula: f64,
    pub c4_formula: f64,
    pub samples: usize,
}

/// Empirical envelope for the δ-split difference bound
/// `|A(|X|) - A(|Y|)| <= C3 δ^{-a1(1+a1)} A(|X-Y|) + C4 δ^{a0+1}(A(|X|)+A(|Y|))`,
/// with `C3 = (1+a1) C_upper` and `C4 = (1+a1) 2^{a1} C3` built from the
/// empirical kernel band constant `c_upper`.
pub fn difference_split_scan(
    nf: &NFunction,
    n: usize,
    delta: f64,
    trials: usize,
    c_upper: f64,
    seed: u64,
) -> Result<SplitBoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("split bound needs δ in (0,1), got {delta}")));
    }
    let (a0, a1) = (nf.a0(), nf.a1());
    let c3 = (1.0 + a1) * c_upper;
    let c4 = (1.0 + a1) * 2f64.powf(a1) * c3;
    let dpow_neg = delta.powf(-(a1 * (1.0 + a1)));
    let dpow_pos = delta.powf(a0 + 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_c3 = 0.0_f64;
    let mut worst_c4 = 0.0_f64;
    let adv = adversarial_pairs(n);
    for k in 0..trials {
        let (x, y) = if k < adv.len() {
            adv[k].clone()
        } else {
            (sample_vector(&mut rng, n, k), sample_vector(&mut rng, n, k + 1))
        };
        let lhs = (nf.eval_raw(norm(&x)) - nf.eval_raw(norm(&y))).abs();
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let t_diff = nf.eval_raw(norm(&diff)) * dpow_neg;
        let t_sum = (nf.eval_raw(norm(&x)) + nf.eval_raw(norm(&y))) * dpow_pos;
        if t_diff > 0.0 {
            worst_c3 = worst_c3.max((lhs - c4 * t_sum) / t_diff);
        }
        if t_sum > 0.0 {
            worst_c4 = worst_c4.max((lhs - c3 * t_diff) / t_sum);
        }
    }
    Ok(SplitBoundReport {
        worst_c3_needed: worst_c3,
        worst_c4_needed: worst_c4,
        c3_formula: c3,
        c4_formula: c4,
        samples: trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_is_identity_for_quadratic_primitive() {
        let nf = NFunction::power(2.0).unwrap();
        let t = flux(&nf, &[3.0, 4.0]).unwrap();
        assert!((t[0] - 3.0).abs() < 1e-14 && (t[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn flux_vanishes_at_zero_and_rejects_non_finite() {
        let nf = NFunction::power(3.0).unwrap();
        assert_eq!(flux(&nf, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(flux(&nf, &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn flux_magnitude_is_density_of_magnitude() {
        let nf = NFunction::power(3.0).unwrap();
        let t = flux(&nf, &[1.0, 0.0]).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-14 && t[1] == 0.0);
        let t = flux(&nf, &[2.0, 0.0]).unwrap();
        assert!((t[0] - 4.0).abs() < 1e-14);
        // |Θ(X)| = a(|X|) across scales
        for &s in &[1e-8, 1e-2, 5.0, 1e6] {
            let t = flux(&nf, &[s * 0.6, s * 0.8]).unwrap();
            let m = norm(&t);
            assert!((m - nf.density(s)).abs() <= 1e-12 * nf.density(s));
        }
    }

    #[test]
    fn monotonicity_quadratic_case_is_exactly_one() {
        let nf = NFunction::power(2.0).unwrap();
        let s = monotonicity_ratio(&nf, &[0.3, -1.0], &[2.0, 0.7]).unwrap();
        assert!((s.ratio - 1.0).abs() < 1e-12, "{}", s.ratio);
    }

    #[test]
    fn monotonicity_cubic_hand_samples() {
        // a(t) = t² with X = e1, Y = e2: Θ(X) = e1, Θ(Y) = e2,
        // lhs = 2, s = √2, rhs = 2·a(√2)/√2 = 2√2, ratio = 1/√2.
        let nf = NFunction::power(3.0).unwrap();
        let s = monotonicity_ratio(&nf, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.lhs - 2.0).abs() < 1e-12);
        assert!((s.rhs_structural - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((s.ratio - expected).abs() < 1e-12, "{}", s.ratio);

        // antiparallel Y = -X: lhs = 4|X|³, rhs = 4√2|X|³, same ratio
        let x = [0.9, -0.4];
        let y = [-0.9, 0.4];
        let s = monotonicity_ratio(&nf, &x, &y).unwrap();
        let r = norm(&x);
        assert!((s.lhs - 4.0 * r.powi(3)).abs() < 1e-12 * s.lhs);
        assert!((s.ratio - expected).abs() < 1e-12, "{}", s.ratio);
    }

    #[test]
    fn monotonicity_rejects_equal_inputs() {
        let nf = NFunction::power(2.0).unwrap();
        assert!(monotonicity_ratio(&nf, &[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(monotonicity_ratio(&nf, &[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn line_kernel_quadratic_is_one() {
        let nf = NFunction::power(2.0).unwrap();
        for (xi, zeta) in [([1.0, 0.0], [0.0, 1.0]), ([2.0, 1.0], [-0.3, 0.4]), ([1.0, 0.0], [-1.0, 0.0])]
        {
            let g = line_kernel(&nf, &xi, &zeta, 256).unwrap();
            assert!((g - 1.0).abs() < 1e-12, "got {g}");
        }
    }

    #[test]
    fn line_kernel_constant_segment() {
        let nf = NFunction::power(3.0).unwrap();
        let g = line_kernel(&nf, &[1.0, 0.0], &[1.0, 0.0], 256).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn line_kernel_perpendicular_cubic_matches_closed_form() {
        // ∫₀¹ √(t² + (1-t)²) dt = (2 + √2 asinh 1)/4
        let nf = NFunction::power(3.0).unwrap();
        let exact = (2.0 + std::f64::consts::SQRT_2 * 1.0f64.asinh()) / 4.0;
        let g = line_kernel(&nf, &[1.0, 0.0], &[0.0, 1.0], 1024).unwrap();
        assert!((g - exact).abs() < 1e-11, "got {g}, want {exact}");
        // brute-force midpoint oracle over 10⁶ points agrees
        let mut acc = 0.0;
        let m = 1_000_000;
        for k in 0..m {
            let t = (k as f64 + 0.5) / m as f64;
            acc += (t * t + (1.0 - t) * (1.0 - t)).sqrt();
        }
        acc /= m as f64;
        assert!((g - acc).abs() < 1e-9, "quadrature {g} vs oracle {acc}");
    }

    #[test]
    fn line_kernel_through_origin_uses_singular_split() {
        // a(t) = t²: G = ∫₀¹ |2t-1| dt = 1/2 on the antiparallel pair
        let nf = NFunction::power(3.0).unwrap();
        let g = line_kernel(&nf, &[1.0, 0.0], &[-1.0, 0.0], 256).unwrap();
        assert!((g - 0.5).abs() < 1e-10, "got {g}");
        // ratio against the envelope a(2)/2 = 2 is 1/4
        assert!((g / 2.0 - 0.25).abs() < 1e-10);
    }

    #[test]
    fn line_kernel_rejects_double_zero() {
        let nf = NFunction::power(2.0).unwrap();
        assert!(line_kernel(&nf, &[0.0, 0.0], &[0.0, 0.0], 64).is_err());
    }

    #[test]
    fn power_kernel_values() {
        assert_eq!(power_line_kernel(2.0, &[0.4, 1.0], &[2.0, -1.0], 64).unwrap(), 1.0);
        // ξ = ζ: constant integrand |ξ|^{p-2}
        let f = power_line_kernel(3.5, &[3.0, 4.0], &[3.0, 4.0], 64).unwrap();
        assert!((f - 5.0f64.powf(1.5)).abs() < 1e-12);
        // p = 4 perpendicular: ∫₀¹ t² + (1-t)² dt = 2/3
        let f = power_line_kernel(4.0, &[1.0, 0.0], &[0.0, 1.0], 512).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-12, "got {f}");
    }

    #[test]
    fn power_kernel_singular_segment_is_finite() {
        // p = 1.5 antiparallel: ∫₀¹ |2t-1|^{-1/2} dt = 2
        let f = power_line_kernel(1.5, &[1.0, 0.0], &[-1.0, 0.0], 256).unwrap();
        assert!((f - 2.0).abs() < 1e-9, "got {f}");
    }

    #[test]
    fn kernel_quadrature_converges_under_doubling() {
        let nf = NFunction::power(3.0).unwrap();
        let xi = [1.3, -0.2];
        let zeta = [0.1, 2.0];
        let a = line_kernel(&nf, &xi, &zeta, 512).unwrap();
        let b = line_kernel(&nf, &xi, &zeta, 1024).unwrap();
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
    }

    #[test]
    fn band_scans_are_positive_and_bounded() {
        let nf = NFunction::power(3.0).unwrap();
        let band = line_kernel_band_scan(&nf, 2, 2000, 256, 7).unwrap();
        assert!(band.min_ratio > 0.2 && band.max_ratio <= 1.0 + 1e-9, "{band:?}");
        let nf2 = NFunction::power(2.0).unwrap();
        let band2 = line_kernel_band_scan(&nf2, 2, 500, 256, 7).unwrap();
        assert!((band2.min_ratio - 1.0).abs() < 1e-12 && (band2.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_inequality_holds_and_hand_case() {
        let nf = NFunction::power(2.0).unwrap();
        let rep = support_inequality_scan(&nf, 2, 3000, 3).unwrap();
        assert!(rep.min_slack >= -1e-9, "{rep:?}");
        // X = e2, Y = e1: slack is (1/2) - (1/2 + <e1, (-1,1)>) = 1
        let ax = nf.eval(1.0).unwrap();
        let ay = nf.eval(1.0).unwrap();
        let cross = -1.0;
        assert!((ax - ay - cross - 1.0).abs() < 1e-14);
    }

    #[test]
    fn split_bound_trivial_cases() {
        let nf = NFunction::power(2.0).unwrap();
        // X = Y: lhs = 0, any constants work; Y = 0 needs only the leading
        // term with constant >= δ^{a1(1+a1)}
        let rep = difference_split_scan(&nf, 2, 0.5, 5000, 1.0, 9).unwrap();
        assert!(rep.worst_c3_needed.is_finite() && rep.worst_c4_needed.is_finite());
        assert!(rep.worst_c3_needed >= 0.0);
        assert!(difference_split_scan(&nf, 2, 1.5, 10, 1.0, 9).is_err());
    }
}
