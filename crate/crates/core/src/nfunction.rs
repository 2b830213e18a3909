//! N-functions `A(t) = ∫₀ᵗ a(s) ds` described by their density `a`, with the
//! two-sided index condition `a0 <= t a'(t)/a(t) <= a1` enforced on the
//! density, plus evaluation, inversion, Young conjugation, and the numeric
//! verifiers for the structural inequalities the index condition implies.

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, invert_increasing};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// Relative quadrature tolerance for the primitive and the conjugate.
pub const QUAD_REL_TOL: f64 = 1e-10;
/// Relative accuracy of `inverse`.
pub const INVERSE_REL_TOL: f64 = 1e-10;
/// Margin used when widening a declared index pair so that `a0 < 1 < a1`.
const INDEX_WIDEN_EPS: f64 = 1e-6;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A Young/N-function represented by its density.
///
/// The stored index pair is the declared one widened, if necessary, so that
/// `a0 < 1 < a1`; an index condition that holds with tighter constants also
/// holds with wider ones, so the widening never invalidates a density. Both
/// pairs are kept.
#[derive(Clone)]
pub struct NFunction {
    label: String,
    density: RealFn,
    density_deriv: RealFn,
    primitive: Option<RealFn>,
    declared: (f64, f64),
    indices: (f64, f64),
}

impl fmt::Debug for NFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NFunction")
            .field("label", &self.label)
            .field("declared", &self.declared)
            .field("indices", &self.indices)
            .finish()
    }
}

impl NFunction {
    /// Builds an N-function from raw parts. `a0`/`a1` are the declared index
    /// bounds for `t a'(t)/a(t)`; `primitive` is an optional closed form for
    /// `A` that short-circuits quadrature.
    pub fn from_parts(
        label: impl Into<String>,
        density: RealFn,
        density_deriv: RealFn,
        primitive: Option<RealFn>,
        a0: f64,
        a1: f64,
    ) -> Result<Self> {
        if !(a0.is_finite() && a1.is_finite()) || a0 <= 0.0 || a1 < a0 {
            return Err(Error::Domain(format!(
                "index bounds must satisfy 0 < a0 <= a1 < inf, got ({a0}, {a1})"
            )));
        }
        let indices = (a0.min(1.0 - INDEX_WIDEN_EPS), a1.max(1.0 + INDEX_WIDEN_EPS));
        Ok(NFunction {
            label: label.into(),
            density,
            density_deriv,
            primitive,
            declared: (a0, a1),
            indices,
        })
    }

    /// Power density `a(t) = t^(p-1)`, so `A(t) = t^p / p`.
    pub fn power(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::Domain(format!("power family needs p > 1, got {p}")));
        }
        let e = p - 1.0;
        let density: RealFn = Arc::new(move |t: f64| t.powf(e));
        let density_deriv: RealFn = Arc::new(move |t: f64| e * t.powf(e - 1.0));
        let primitive: RealFn = Arc::new(move |t: f64| t.powf(p) / p);
        Self::from_parts(
            format!("power:{p}"),
            density,
            density_deriv,
            Some(primitive),
            e,
            e,
        )
    }

    /// Log-perturbed power density `a(t) = t^(p-1) (log(e + t))^q`, `q >= 0`.
    ///
    /// The upper index is estimated by a fine scan of the ratio
    /// `t a'(t)/a(t) = (p-1) + q t / ((e+t) log(e+t))` and recorded with a
    /// small safety margin; the lower index is exactly `p-1` since the
    /// perturbation term is positive.
    pub fn plog(p: f64, q: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 || !q.is_finite() || q < 0.0 {
            return Err(Error::Domain(format!("plog family needs p > 1, q >= 0, got ({p}, {q})")));
        }
        let e = p - 1.0;
        let density: RealFn =
            Arc::new(move |t: f64| t.powf(e) * (std::f64::consts::E + t).ln().powf(q));
        let density_deriv: RealFn = Arc::new(move |t: f64| {
            let base = std::f64::consts::E + t;
            let l = base.ln();
            e * t.powf(e - 1.0) * l.powf(q) + t.powf(e) * q * l.powf(q - 1.0) / base
        });
        let mut bump: f64 = 0.0;
        for k in 0..4096 {
            let t = 10f64.powf(-12.0 + 24.0 * k as f64 / 4095.0);
            let base = std::f64::consts::E + t;
            bump = bump.max(t / (base * base.ln()));
        }
        let a1 = e + q * bump + 1e-9;
        // closed-form primitive for the (2, 1) member, which sees heavy use
        let primitive: Option<RealFn> = if p == 2.0 && q == 1.0 {
            let ee = std::f64::consts::E;
            Some(Arc::new(move |t: f64| {
                0.5 * (t * t - ee * ee) * (ee + t).ln() + 0.25 * (2.0 * ee * t - t * t)
                    + 0.5 * ee * ee
            }))
        } else {
            None
        };
        Self::from_parts(format!("plog:{p},{q}"), density, density_deriv, primitive, e, a1)
    }

    /// Parses a CLI family spec such as `power:2.5` or `plog:2,1`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let (family, params) = spec
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bad N-function spec `{spec}`")))?;
        let nums: Vec<f64> = params
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad N-function parameters `{params}`: {e}")))?;
        match (family, nums.as_slice()) {
            ("power", [p]) => Self::power(*p),
            ("plog", [p, q]) => Self::plog(*p, *q),
            _ => Err(Error::Config(format!("unknown N-function spec `{spec}`"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Effective lower index (after widening so `a0 < 1`).
    pub fn a0(&self) -> f64 {
        self.indices.0
    }

    /// Effective upper index (after widening so `a1 > 1`).
    pub fn a1(&self) -> f64 {
        self.indices.1
    }

    /// Index pair exactly as declared by the constructor.
    pub fn declared_indices(&self) -> (f64, f64) {
        self.declared
    }

    /// Density value `a(t)`.
    pub fn density(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        (self.density)(t)
    }

    /// Density derivative `a'(t)`, `t > 0`.
    pub fn density_deriv(&self, t: f64) -> f64 {
        (self.density_deriv)(t)
    }

    pub(crate) fn eval_raw(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match &self.primitive {
            Some(af) => af(t),
            None => adaptive_simpson(&|s| self.density(s), 0.0, t, QUAD_REL_TOL),
        }
    }

    /// `A(t)`: closed form when available, otherwise adaptive quadrature of
    /// the density at relative tolerance `1e-10`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("A(t) needs finite t >= 0, got {t}")));
        }
        Ok(self.eval_raw(t))
    }

    /// Quadrature-only evaluation of `A`, ignoring any closed form.
    pub fn eval_by_quadrature(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("A(t) needs finite t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(adaptive_simpson(&|s| self.density(s), 0.0, t, QUAD_REL_TOL))
    }

    /// `A^{-1}(y)`: monotone bracketing plus safeguarded Newton polish using
    /// the density as derivative.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y < 0.0 {
            return Err(Error::Domain(format!("inverse needs finite y >= 0, got {y}")));
        }
        invert_increasing(&|t| self.eval_raw(t), &|t| self.density(t), y, INVERSE_REL_TOL)
    }

    /// Inverse of the density itself, `a^{-1}(s)`.
    pub fn density_inverse(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Domain(format!("density inverse needs s >= 0, got {s}")));
        }
        invert_increasing(&|t| self.density(t), &|t| self.density_deriv(t), s, 1e-12)
    }

    /// Young conjugate `Ã(t) = ∫₀ᵗ a^{-1}(s) ds`, by quadrature of the
    /// numerically inverted density.
    pub fn conjugate(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("conjugate needs finite t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(adaptive_simpson(
            &|s| self.density_inverse(s).unwrap_or(f64::NAN),
            0.0,
            t,
            1e-9,
        ))
    }

    /// Scans `r(t) = t a'(t)/a(t)` on a log-spaced grid and checks it against
    /// the stored index pair with slack `1e-8`.
    pub fn check_index_condition(
        &self,
        t_min: f64,
        t_max: f64,
        samples: usize,
    ) -> Result<IndexConditionReport> {
        if !(t_min > 0.0 && t_max > t_min) || samples < 2 {
            return Err(Error::Domain(format!(
                "index scan needs 0 < t_min < t_max and samples >= 2, got ({t_min}, {t_max}, {samples})"
            )));
        }
        let eps = 1e-8;
        let (a0, a1) = self.indices;
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = f64::NEG_INFINITY;
        let mut zero_density_at = None;
        let log_lo = t_min.ln();
        let log_hi = t_max.ln();
        for k in 0..samples {
            let t = (log_lo + (log_hi - log_lo) * k as f64 / (samples - 1) as f64).exp();
            let a = self.density(t);
            if a <= 0.0 || !a.is_finite() {
                zero_density_at = Some(t);
                continue;
            }
            let r = t * self.density_deriv(t) / a;
            min_ratio = min_ratio.min(r);
            max_ratio = max_ratio.max(r);
        }
        let in_band = min_ratio >= a0 - eps && max_ratio <= a1 + eps;
        Ok(IndexConditionReport {
            min_ratio,
            max_ratio,
            pass: in_band && zero_density_at.is_none(),
            zero_density_at,
        })
    }

    /// Random check of the five structural inequalities implied by the index
    /// condition, at relative slack `1e-9`. Draws `trials` pairs
    /// `(s, t) ∈ [0, range]²` plus a deterministic prefix of edge cases.
    pub fn check_basic_inequalities(
        &self,
        trials: usize,
        range: f64,
        seed: u64,
    ) -> Result<BasicInequalityReport> {
        if trials < 1 || !(range > 0.0) {
            return Err(Error::Domain(format!(
                "inequality scan needs trials >= 1 and range > 0, got ({trials}, {range})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checks: Vec<InequalityCheck> = [
            "ta_envelope",
            "cross_term",
            "density_scaling",
            "primitive_scaling",
            "subadditivity",
        ]
        .iter()
        .map(|id| InequalityCheck { id, worst_slack: f64::INFINITY, violations: Vec::new() })
        .collect();

        let edge = [
            (0.0, 0.0),
            (0.0, 1.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (range, range),
            (1e-9, range),
            (range, 1e-9),
        ];
        let record = |slot: &mut InequalityCheck, s: f64, t: f64, slack: f64| {
            if slack < slot.worst_slack {
                slot.worst_slack = slack;
            }
            if slack < 0.0 && slot.violations.len() < 16 {
                slot.violations.push((s, t, slack));
            }
        };
        let (_, a1) = self.indices;
        let tol = 1e-9;
        for k in 0..trials + edge.len() {
            let (s, t) = if k < edge.len() {
                edge[k]
            } else {
                (rng.gen_range(0.0..=range), rng.gen_range(0.0..=range))
            };
            let at = self.density(t);
            let as_ = self.density(s);
            let bt = self.eval_raw(t);
            let bs = self.eval_raw(s);

            // t a(t)/(1 + a1) <= A(t) <= t a(t)
            let scale = (t * at).abs().max(1.0);
            record(&mut checks[0], s, t, ((bt - t * at / (1.0 + a1)) / scale).min((t * at - bt) / scale));

            // s a(t) <= s a(s) + t a(t)
            let scale = (s * as_ + t * at).abs().max(1.0);
            record(&mut checks[1], s, t, (s * as_ + t * at - s * at) / scale + tol * 0.0);

            // min(s^a0, s^a1) a(t) <= a(st) <= max(s^a0, s^a1) a(t)
            let (a0e, a1e) = self.indices;
            let (plo, phi) = (s.powf(a0e).min(s.powf(a1e)), s.powf(a0e).max(s.powf(a1e)));
            let ast = self.density(s * t);
            let scale = (phi * at).abs().max(1.0);
            record(&mut checks[2], s, t, ((ast - plo * at) / scale).min((phi * at - ast) / scale));

            // min(s^(1+a0), s^(1+a1)) A(t)/(1+a1) <= A(st) <= (1+a1) max(...) A(t)
            let (qlo, qhi) =
                (s.powf(1.0 + a0e).min(s.powf(1.0 + a1e)), s.powf(1.0 + a0e).max(s.powf(1.0 + a1e)));
            let bst = self.eval_raw(s * t);
            let scale = ((1.0 + a1) * qhi * bt).abs().max(1.0);
            record(
                &mut checks[3],
                s,
                t,
                ((bst - qlo * bt / (1.0 + a1)) / scale).min(((1.0 + a1) * qhi * bt - bst) / scale),
            );

            // A(s+t) <= (1+a1) 2^a1 (A(s) + A(t))
            let lim = (1.0 + a1) * 2f64.powf(a1) * (bs + bt);
            let scale = lim.abs().max(1.0);
            record(&mut checks[4], s, t, (lim - self.eval_raw(s + t)) / scale);
        }
        let pass = checks.iter().all(|c| c.worst_slack >= -tol);
        Ok(BasicInequalityReport { checks, pass, tol })
    }
}

#[derive(Debug, Clone)]
pub struct IndexConditionReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
    /// Set when the density vanished at a sampled `t > 0` (structural
    /// failure rather than an index violation).
    pub zero_density_at: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct InequalityCheck {
    pub id: &'static str,
    /// Most negative normalized slack seen; nonnegative means the inequality
    /// held on every sample.
    pub worst_slack: f64,
    pub violations: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct BasicInequalityReport {
    pub checks: Vec<InequalityCheck>,
    pub pass: bool,
    pub tol: f64,
}

/// A pair `(A, B)` admissible for the higher-integrability transfer: the
/// composite `B ∘ A^{-1}` must itself be an N-function, which is checked by
/// estimating the index ratio of the composite's *density*.
#[derive(Debug, Clone)]
pub struct NFunctionPair {
    pub a: NFunction,
    pub b: NFunction,
    pub composite_indices: (f64, f64),
}

impl NFunctionPair {
    /// Builds the pair and runs the admissibility estimate; rejects pairs
    /// whose composite density index is not bounded away from zero.
    pub fn new(a: NFunction, b: NFunction) -> Result<Self> {
        let (lo, hi) = composite_density_indices(&a, &b, 64)?;
        if !(lo.is_finite() && hi.is_finite()) || lo <= 1e-3 {
            return Err(Error::Domain(format!(
                "pair ({}, {}) rejected: composite density index range ({lo:.3e}, {hi:.3e})",
                a.label(),
                b.label()
            )));
        }
        Ok(NFunctionPair { a, b, composite_indices: (lo, hi) })
    }

    /// `B(A^{-1}(t))`.
    pub fn composite_value(&self, t: f64) -> Result<f64> {
        let s = self.a.inverse(t)?;
        self.b.eval(s)
    }

    /// Density of the composite `B ∘ A^{-1}`, namely `b(s)/a(s)` at
    /// `s = A^{-1}(t)`.
    pub fn composite_density(&self, t: f64) -> Result<f64> {
        let s = self.a.inverse(t)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        Ok(self.b.density(s) / self.a.density(s))
    }

    /// Re-runs the index estimate on a grid of the given size.
    pub fn estimate_composite_indices(&self, samples: usize) -> Result<(f64, f64)> {
        composite_density_indices(&self.a, &self.b, samples)
    }

    /// Checks that `t ↦ B(A^{-1}(1/t))` has a convergent tail integral on
    /// `[1, ∞)`: partial integrals over `[1, T]` must become Cauchy under
    /// doubling of `T`.
    pub fn tail_integral_converges(&self, tol: f64, max_doublings: u32) -> Result<TailReport> {
        let f = |t: f64| self.composite_value(1.0 / t).unwrap_or(f64::NAN);
        let mut total = adaptive_simpson(&f, 1.0, 2.0, 1e-9);
        let mut lo = 2.0_f64;
        for _ in 0..max_doublings {
            let hi = lo * 2.0;
            let piece = adaptive_simpson(&f, lo, hi, 1e-9);
            total += piece;
            if !piece.is_finite() {
                return Err(Error::Numerical("tail integrand became non-finite".into()));
            }
            if piece.abs() < tol {
                return Ok(TailReport { converged: true, upper_limit: hi, integral: total });
            }
            lo = hi;
        }
        Ok(TailReport { converged: false, upper_limit: lo, integral: total })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TailReport {
    pub converged: bool,
    pub upper_limit: f64,
    pub integral: f64,
}

/// Estimates `(min, max)` of the index ratio of the density of `B ∘ A^{-1}`
/// on a log grid, differentiating the density centrally with relative step
/// `1e-5`. The density itself is evaluated exactly as `b(s)/a(s)` with
/// `s = A^{-1}(t)`.
pub fn composite_density_indices(a: &NFunction, b: &NFunction, samples: usize) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::Domain("composite index estimate needs samples >= 2".into()));
    }
    let h = |t: f64| -> Result<f64> {
        let s = a.inverse(t)?;
        Ok(b.density(s) / a.density(s))
    };
    let rel = 1e-5;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..samples {
        let t = 10f64.powf(-4.0 + 8.0 * k as f64 / (samples - 1) as f64);
        let hp = h(t * (1.0 + rel))?;
        let hm = h(t * (1.0 - rel))?;
        let hc = h(t)?;
        if hc <= 0.0 || !hc.is_finite() {
            return Err(Error::Numerical(format!("composite density not positive at t = {t}")));
        }
        let ratio = (hp - hm) / (2.0 * rel * hc);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tlog_nfunction() -> NFunction {
        // a(t) = t log(1+t); analytic primitive kept out so the quadrature
        // path is exercised. Index ratio is 1 + t/((1+t)log(1+t)) ∈ (1, 2).
        let density: RealFn = Arc::new(|t: f64| t * (1.0 + t).ln());
        let deriv: RealFn = Arc::new(|t: f64| (1.0 + t).ln() + t / (1.0 + t));
        NFunction::from_parts("tlog", density, deriv, None, 1.0, 2.0).unwrap()
    }

    #[test]
    fn power_primitive_values() {
        let p2 = NFunction::power(2.0).unwrap();
        assert!((p2.eval(2.0).unwrap() - 2.0).abs() < 1e-14);
        let p3 = NFunction::power(3.0).unwrap();
        assert!((p3.eval(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!(p2.eval(f64::INFINITY).is_err());
        assert!(p2.eval(-1.0).is_err());
    }

    #[test]
    fn tlog_primitive_matches_antiderivative() {
        // ∫₀¹ s log(1+s) ds = 1/4 by parts
        let nf = tlog_nfunction();
        let v = nf.eval(1.0).unwrap();
        assert!((v - 0.25).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn inverse_round_trips() {
        let p2 = NFunction::power(2.0).unwrap();
        assert!((p2.inverse(2.0).unwrap() - 2.0).abs() < 1e-10);
        let p3 = NFunction::power(3.0).unwrap();
        assert!((p3.inverse(1.0 / 3.0).unwrap() - 1.0).abs() < 1e-10);
        let nf = tlog_nfunction();
        assert!((nf.inverse(0.25).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(nf.inverse(0.0).unwrap(), 0.0);
        assert!(nf.inverse(f64::NAN).is_err());
    }

    #[test]
    fn inverse_round_trip_on_log_grid() {
        for nf in [NFunction::power(1.5).unwrap(), NFunction::power(4.0).unwrap(), tlog_nfunction()]
        {
            for k in 0..25 {
                let t = 10f64.powf(-4.0 + 8.0 * k as f64 / 24.0);
                let y = nf.eval(t).unwrap();
                let back = nf.inverse(y).unwrap();
                assert!(
                    (back - t).abs() <= 1e-8 * t.max(1.0),
                    "{}: t = {t}, back = {back}",
                    nf.label()
                );
            }
        }
    }

    #[test]
    fn conjugate_known_values() {
        let p2 = NFunction::power(2.0).unwrap();
        assert!((p2.conjugate(1.0).unwrap() - 0.5).abs() < 1e-8);
        // A(t) = t³/3 has conjugate t^{3/2}/(3/2)
        let p3 = NFunction::power(3.0).unwrap();
        assert!((p3.conjugate(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-8);
        let nf = tlog_nfunction();
        let v = nf.conjugate(1.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(nf.conjugate(-0.5).is_err());
    }

    #[test]
    fn youngs_inequality_with_equality_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for nf in [NFunction::power(2.0).unwrap(), NFunction::power(3.0).unwrap(), tlog_nfunction()]
        {
            for _ in 0..50 {
                let s = rng.gen_range(0.0..10.0);
                let t = rng.gen_range(0.0..10.0);
                let lhs = s * t;
                let rhs = nf.eval(s).unwrap() + nf.conjugate(t).unwrap();
                assert!(lhs <= rhs + 1e-8 * rhs.max(1.0), "{}: ({s}, {t})", nf.label());
            }
            // equality at t = a(s)
            let s = 1.3;
            let t = nf.density(s);
            let gap = nf.eval(s).unwrap() + nf.conjugate(t).unwrap() - s * t;
            assert!(gap.abs() <= 1e-6 * (s * t).max(1.0), "{}: gap {gap}", nf.label());
        }
    }

    #[test]
    fn primitive_is_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for nf in [NFunction::power(1.5).unwrap(), tlog_nfunction()] {
            for _ in 0..200 {
                let s = rng.gen_range(0.0..20.0);
                let t = rng.gen_range(0.0..20.0);
                let lam = rng.gen_range(0.0..1.0);
                let lhs = nf.eval(lam * s + (1.0 - lam) * t).unwrap();
                let rhs = lam * nf.eval(s).unwrap() + (1.0 - lam) * nf.eval(t).unwrap();
                assert!(lhs <= rhs + 1e-9 * rhs.max(1.0));
            }
        }
    }

    #[test]
    fn quadrature_matches_closed_form_for_powers() {
        for p in [1.5, 2.0, 3.0, 4.0] {
            let nf = NFunction::power(p).unwrap();
            for &t in &[0.3, 1.0, 7.0, 50.0] {
                let q = nf.eval_by_quadrature(t).unwrap();
                let c = nf.eval(t).unwrap();
                assert!((q - c).abs() <= 1e-10 * c.max(1e-300), "p={p}, t={t}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn plog_closed_form_matches_quadrature() {
        let nf = NFunction::plog(2.0, 1.0).unwrap();
        for &t in &[0.1, 1.0, 3.0, 20.0] {
            let c = nf.eval(t).unwrap();
            let q = nf.eval_by_quadrature(t).unwrap();
            assert!((c - q).abs() <= 1e-9 * c.max(1.0), "t={t}: {c} vs {q}");
        }
    }

    #[test]
    fn index_condition_power_is_exact() {
        let nf = NFunction::power(3.0).unwrap();
        let rep = nf.check_index_condition(1e-3, 1e3, 200).unwrap();
        assert!(rep.pass);
        assert!((rep.min_ratio - 2.0).abs() < 1e-12);
        assert!((rep.max_ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn index_condition_tlog_stays_in_declared_band() {
        let nf = tlog_nfunction();
        let rep = nf.check_index_condition(1e-6, 1e6, 500).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.min_ratio > 1.0 && rep.max_ratio < 2.0, "{rep:?}");
    }

    #[test]
    fn index_condition_detects_exponential_growth() {
        let density: RealFn = Arc::new(|t: f64| t.exp() - 1.0);
        let deriv: RealFn = Arc::new(|t: f64| t.exp());
        let nf = NFunction::from_parts("expm1", density, deriv, None, 1.0, 5.0).unwrap();
        let rep = nf.check_index_condition(1e-2, 1e2, 300).unwrap();
        assert!(!rep.pass, "unbounded ratio must fail: {rep:?}");
    }

    #[test]
    fn index_widening_straddles_one() {
        let nf = NFunction::power(2.0).unwrap();
        assert_eq!(nf.declared_indices(), (1.0, 1.0));
        assert!(nf.a0() < 1.0 && nf.a1() > 1.0);
        let nf = NFunction::power(1.5).unwrap();
        assert_eq!(nf.declared_indices().0, 0.5);
        assert!(nf.a0() == 0.5 && nf.a1() > 1.0);
    }

    #[test]
    fn basic_inequalities_hold_for_builtins() {
        for nf in [
            NFunction::power(1.5).unwrap(),
            NFunction::power(2.0).unwrap(),
            NFunction::power(3.0).unwrap(),
            tlog_nfunction(),
        ] {
            let rep = nf.check_basic_inequalities(2000, 100.0, 421).unwrap();
            assert!(rep.pass, "{}: {:?}", nf.label(), rep.checks);
        }
    }

    #[test]
    fn composite_indices_power_pairs() {
        // A = t^p/p, B = t^q/q: composite density index is exactly q/p - 1
        for (p, q) in [(2.0, 4.0), (3.0, 4.5), (2.0, 3.0)] {
            let a = NFunction::power(p).unwrap();
            let b = NFunction::power(q).unwrap();
            let (lo, hi) = composite_density_indices(&a, &b, 40).unwrap();
            let exact = q / p - 1.0;
            assert!((lo - exact).abs() < 1e-4, "(p,q)=({p},{q}): lo={lo}");
            assert!((hi - exact).abs() < 1e-4, "(p,q)=({p},{q}): hi={hi}");
        }
    }

    #[test]
    fn identity_composite_is_rejected() {
        // B = A gives composite density 1, whose index ratio is 0; the tail
        // integral of B(A^{-1}(1/t)) = 1/t also diverges, so the pair is
        // correctly inadmissible for the transfer estimate.
        let a = NFunction::power(2.0).unwrap();
        let b = NFunction::power(2.0).unwrap();
        let (lo, hi) = composite_density_indices(&a, &b, 40).unwrap();
        assert!(lo.abs() < 1e-4 && hi.abs() < 1e-4, "({lo}, {hi})");
        assert!(NFunctionPair::new(a, b).is_err());
    }

    #[test]
    fn admissible_pair_tail_integral_is_cauchy() {
        let pair = NFunctionPair::new(
            NFunction::power(2.0).unwrap(),
            NFunction::power(4.0).unwrap(),
        )
        .unwrap();
        let rep = pair.tail_integral_converges(1e-6, 60).unwrap();
        assert!(rep.converged, "{rep:?}");
        // B(A^{-1}(1/t)) = 1/t² integrates to 1 over [1, ∞)
        assert!((rep.integral - 1.0).abs() < 1e-3, "{rep:?}");
    }

    #[test]
    fn parse_spec_accepts_families() {
        assert_eq!(NFunction::parse_spec("power:2.5").unwrap().label(), "power:2.5");
        assert_eq!(NFunction::parse_spec("plog:2,1").unwrap().label(), "plog:2,1");
        assert!(NFunction::parse_spec("gauss:1").is_err());
        assert!(NFunction::parse_spec("power").is_err());
    }
}
