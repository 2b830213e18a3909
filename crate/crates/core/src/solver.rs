//! Variational solvers.
//!
//! The periodic problem minimizes `J(u) = h^n Σ [A(|∇u|) - Θ(F)·∇u]`, whose
//! stationarity condition is the divergence-form equation
//! `div Θ(∇u) = div Θ(F)`; the minimizer is computed by nonlinear conjugate
//! gradients preconditioned with the inverse of the constant-coefficient
//! Laplacian, with a backtracking line search seeded by a parabolic fit.
//!
//! The ball problem pins a boundary ring and minimizes `h^n Σ A(|∇v|)`
//! sampled at cell corners, which keeps affine data exactly stationary and
//! controls the checkerboard mode that node-centered stencils cannot see.

use crate::error::{Error, Result};
use crate::field::{divergence, gradient, Grid, ScalarField, Topology, VectorField};
use crate::nfunction::NFunction;
use crate::operator::FLUX_FLOOR_REL;
use crate::spectral::Spectral;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Starting point for a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Periodic: spectral solve of the linear problem with the same source.
    /// Ball: the boundary-data field itself.
    Warm,
    Zero,
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative residual target (see the per-problem normalizations below).
    pub residual_tol: f64,
    /// Relative smoothing width for the degenerate regime; `|∇u|` is
    /// replaced by `sqrt(|∇u|² + ε²)` on a continuation ladder, then
    /// polished with `ε = 0`. Scaled by the gradient magnitude of the
    /// problem. Zero disables smoothing.
    pub regularization_eps: f64,
    /// Backtracking shrink factor in (0, 1).
    pub ls_shrink: f64,
    /// Sufficient-decrease constant.
    pub ls_c1: f64,
    pub init: Init,
}

impl SolverConfig {
    /// Defaults keyed to the declared indices: tight tolerance for the
    /// linear case, and smoothing only when the density is degenerate near
    /// zero (`a0 < 1`).
    pub fn default_for(nf: &NFunction) -> Self {
        let (d0, d1) = nf.declared_indices();
        let linear = d0 == 1.0 && d1 == 1.0;
        SolverConfig {
            max_iters: if linear { 500 } else { 6000 },
            residual_tol: if linear { 1e-8 } else { 1e-6 },
            regularization_eps: if d0 < 1.0 { 1e-8 } else { 0.0 },
            ls_shrink: 0.5,
            ls_c1: 1e-4,
            init: Init::Warm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config(format!("residual_tol must be > 0, got {}", self.residual_tol)));
        }
        if !(self.ls_shrink > 0.0 && self.ls_shrink < 1.0) {
            return Err(Error::Config(format!("ls_shrink must be in (0,1), got {}", self.ls_shrink)));
        }
        if self.regularization_eps < 0.0 {
            return Err(Error::Config("regularization_eps must be >= 0".into()));
        }
        Ok(())
    }

    /// Geometric ladder of smoothing widths ending at zero, scaled by the
    /// problem's gradient magnitude.
    fn smoothing_ladder(&self, grad_scale: f64) -> Vec<(f64, f64, usize)> {
        let mut phases = Vec::new();
        if self.regularization_eps > 0.0 {
            let mut eps = 1e-2;
            while eps > self.regularization_eps {
                phases.push((eps * grad_scale, self.residual_tol * 100.0, self.max_iters / 4));
                eps *= 1e-2;
            }
            phases.push((
                self.regularization_eps * grad_scale,
                self.residual_tol * 100.0,
                self.max_iters / 4,
            ));
        }
        phases.push((0.0, self.residual_tol, self.max_iters));
        phases
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub u: ScalarField,
    /// Final residual, normalized so that `converged` means
    /// `residual_norm <= residual_tol`.
    pub residual_norm: f64,
    pub energy_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
}

fn l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_mean(values: &mut [f64]) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
}

/// `Θ(F)` as a field, with the zero-clamp floor scaled to the field.
fn flux_field(nf: &NFunction, f: &VectorField, floor: f64) -> VectorField {
    let n = f.grid.node_count();
    let d = f.grid.dim();
    let mut comps = vec![vec![0.0; n]; d];
    for flat in 0..n {
        let r = f.magnitude_at(flat);
        if r > floor {
            let s = nf.density(r) / r;
            for k in 0..d {
                comps[k][flat] = s * f.comps[k][flat];
            }
        }
    }
    VectorField { grid: f.grid.clone(), comps }
}

/// `J(u) = h^n Σ [A(|∇u|) - Θ(F)·∇u]` on the periodic box.
pub fn energy(nf: &NFunction, u: &ScalarField, f: &VectorField) -> Result<f64> {
    check_periodic_pair(u, f)?;
    let floor = FLUX_FLOOR_REL * f.max_abs().max(1e-30);
    let t = flux_field(nf, f, floor);
    let gu = gradient(u);
    Ok(u.grid.cell_volume() * sample_energy(nf, &gu, Some(&t), 0.0))
}

/// Exact gradient of `energy` with respect to the node values:
/// `h^n · (-div(Θ(∇u) - Θ(F)))`.
pub fn energy_gradient(nf: &NFunction, u: &ScalarField, f: &VectorField) -> Result<ScalarField> {
    let mut r = residual_field(nf, u, f)?;
    let vol = u.grid.cell_volume();
    for v in r.values.iter_mut() {
        *v *= vol;
    }
    Ok(r)
}

/// Divergence-form residual `r(u) = -div(Θ(∇u) - Θ(F))`.
pub fn residual_field(nf: &NFunction, u: &ScalarField, f: &VectorField) -> Result<ScalarField> {
    check_periodic_pair(u, f)?;
    let gu = gradient(u);
    let scale = f.max_abs().max(gu.max_abs()).max(1e-30);
    let floor = FLUX_FLOOR_REL * scale;
    let t = flux_field(nf, f, floor);
    let (_, r) = periodic_energy_and_residual(nf, &gu, &t, 0.0, floor);
    Ok(ScalarField { grid: u.grid.clone(), values: r })
}

fn check_periodic_pair(u: &ScalarField, f: &VectorField) -> Result<()> {
    if u.grid != f.grid {
        return Err(Error::Grid("scalar and vector fields live on different grids".into()));
    }
    if !matches!(u.grid.topology(), Topology::Periodic) {
        return Err(Error::Grid("periodic solver operations need a periodic grid".into()));
    }
    Ok(())
}

/// Sample-streamed energy `Σ [A(sqrt(|g|² + ε²)) - A(ε) - T·g]`; the sample
/// count is the component length, which lets the same kernel stream both
/// node gradients (periodic) and per-corner cell gradients (ball).
fn sample_energy(nf: &NFunction, g: &VectorField, t: Option<&VectorField>, eps: f64) -> f64 {
    let count = g.comps[0].len();
    let d = g.comps.len();
    let a_eps = if eps > 0.0 { nf.eval_raw(eps) } else { 0.0 };
    let mut acc = 0.0;
    for flat in 0..count {
        let mut m2 = eps * eps;
        let mut tg = 0.0;
        for k in 0..d {
            let gv = g.comps[k][flat];
            m2 += gv * gv;
            if let Some(t) = t {
                tg += t.comps[k][flat] * gv;
            }
        }
        acc += nf.eval_raw(m2.sqrt()) - a_eps - tg;
    }
    acc
}

/// Same energy along the ray `g + α gd`, one sweep per line-search trial.
fn sample_energy_along(
    nf: &NFunction,
    g: &VectorField,
    gd: &VectorField,
    t: Option<&VectorField>,
    alpha: f64,
    eps: f64,
) -> f64 {
    let count = g.comps[0].len();
    let d = g.comps.len();
    let a_eps = if eps > 0.0 { nf.eval_raw(eps) } else { 0.0 };
    let mut acc = 0.0;
    for flat in 0..count {
        let mut m2 = eps * eps;
        let mut tg = 0.0;
        for k in 0..d {
            let gv = g.comps[k][flat] + alpha * gd.comps[k][flat];
            m2 += gv * gv;
            if let Some(t) = t {
                tg += t.comps[k][flat] * gv;
            }
        }
        acc += nf.eval_raw(m2.sqrt()) - a_eps - tg;
    }
    acc
}

/// Periodic energy core and residual values in one sweep.
fn periodic_energy_and_residual(
    nf: &NFunction,
    g: &VectorField,
    t: &VectorField,
    eps: f64,
    floor: f64,
) -> (f64, Vec<f64>) {
    let grid = &g.grid;
    let n = grid.node_count();
    let d = grid.dim();
    let a_eps = if eps > 0.0 { nf.eval_raw(eps) } else { 0.0 };
    let mut acc = 0.0;
    let mut w = VectorField::zeros(grid.clone());
    for flat in 0..n {
        let mut m2 = eps * eps;
        let mut tg = 0.0;
        for k in 0..d {
            let gv = g.comps[k][flat];
            m2 += gv * gv;
            tg += t.comps[k][flat] * gv;
        }
        let m = m2.sqrt();
        acc += nf.eval_raw(m) - a_eps - tg;
        let s = if m > floor { nf.density(m) / m } else { 0.0 };
        for k in 0..d {
            w.comps[k][flat] = s * g.comps[k][flat] - t.comps[k][flat];
        }
    }
    let mut div = divergence(&w);
    for v in div.values.iter_mut() {
        *v = -*v;
    }
    (acc, div.values)
}

/// Hooks that specialize the conjugate-gradient loop to one of the two
/// problem forms. `eval` returns the energy core, the gradient samples of
/// the iterate, and the residual (already masked); `grad` produces the
/// gradient samples of a direction; `along` evaluates the energy core on a
/// ray.
struct NcgHooks<'a> {
    eval: Box<dyn Fn(&ScalarField, f64) -> (f64, VectorField, Vec<f64>) + 'a>,
    grad: Box<dyn Fn(&ScalarField) -> VectorField + 'a>,
    along: Box<dyn Fn(&VectorField, &VectorField, f64, f64) -> f64 + 'a>,
    precond: Option<&'a Spectral>,
    mask: Option<&'a [bool]>,
    project: bool,
    /// Scale of the first line-search step on the first iteration.
    alpha0: f64,
    /// `h^n`, for reporting energies in integral units.
    vol: f64,
}

struct NcgOutcome {
    trace: Vec<(f64, f64)>,
    iters: usize,
    residual: f64,
    converged: bool,
}

/// Preconditioned Polak-Ribiere nonlinear conjugate gradients with a
/// parabolic-then-backtracking line search under a sufficient-decrease rule.
fn ncg_minimize(
    hooks: &NcgHooks<'_>,
    u: &mut ScalarField,
    eps: f64,
    tol_abs: f64,
    max_iters: usize,
    cfg: &SolverConfig,
) -> Result<NcgOutcome> {
    let apply_mask = |values: &mut Vec<f64>| {
        if let Some(m) = hooks.mask {
            for (v, &ok) in values.iter_mut().zip(m) {
                if !ok {
                    *v = 0.0;
                }
            }
        }
    };
    let precondition = |r: &[f64]| -> Vec<f64> {
        match hooks.precond {
            Some(sp) => sp.apply_inverse_laplacian(r),
            None => r.to_vec(),
        }
    };

    let (mut j_core, mut gu, mut r) = (hooks.eval)(u, eps);
    let mut trace = vec![(hooks.vol * j_core, l2(&r))];
    let mut z = precondition(&r);
    apply_mask(&mut z);
    let mut d: Vec<f64> = z.iter().map(|v| -v).collect();
    let mut rz_prev = dot(&r, &z);
    let mut alpha_init = hooks.alpha0;
    let mut iters = 0;
    let mut converged = false;

    while iters < max_iters {
        let rnorm = l2(&r);
        if rnorm <= tol_abs {
            converged = true;
            break;
        }
        let mut dphi0 = dot(&r, &d);
        if !(dphi0 < 0.0) {
            d = z.iter().map(|v| -v).collect();
            dphi0 = dot(&r, &d);
            if !(dphi0 < 0.0) {
                // preconditioned gradient numerically orthogonal to itself:
                // nothing more can be extracted at this precision
                break;
            }
        }
        let d_field = ScalarField { grid: u.grid.clone(), values: d.clone() };
        let gd = (hooks.grad)(&d_field);

        let phi0 = j_core;
        let eval_line = |alpha: f64| (hooks.along)(&gu, &gd, alpha, eps);
        let mut alpha = alpha_init;
        let mut phi_a = eval_line(alpha);
        // one parabolic refinement from (phi0, dphi0, phi_a)
        let denom_fit = phi_a - phi0 - dphi0 * alpha;
        if denom_fit.is_finite() && denom_fit > 0.0 {
            let cand = -0.5 * dphi0 * alpha * alpha / denom_fit;
            if cand.is_finite() && cand > 1e-3 * alpha && cand < 1e3 * alpha {
                let phi_c = eval_line(cand);
                if phi_c < phi_a || !phi_a.is_finite() {
                    alpha = cand;
                    phi_a = phi_c;
                }
            }
        }
        let mut backtracks = 0;
        let mut failed = false;
        while !(phi_a.is_finite() && phi_a <= phi0 + cfg.ls_c1 * alpha * dphi0) {
            alpha *= cfg.ls_shrink;
            backtracks += 1;
            if backtracks > 80 {
                if !phi_a.is_finite() {
                    return Err(Error::Numerical("line search produced a non-finite energy".into()));
                }
                failed = true;
                break;
            }
            phi_a = eval_line(alpha);
        }
        if failed {
            break;
        }

        for (uv, dv) in u.values.iter_mut().zip(&d) {
            *uv += alpha * dv;
        }
        if hooks.project {
            project_mean(&mut u.values);
        }
        iters += 1;
        alpha_init = (alpha * 2.0).clamp(1e-12, 1e12);

        let (j_new, gu_new, r_new) = (hooks.eval)(u, eps);
        j_core = j_new;
        gu = gu_new;
        let mut z_new = precondition(&r_new);
        apply_mask(&mut z_new);
        let rz_new = dot(&r_new, &z_new);
        // Polak-Ribiere+ with automatic restart
        let num = rz_new - dot(&r, &z_new);
        let beta = if rz_prev > 0.0 { (num / rz_prev).max(0.0) } else { 0.0 };
        for k in 0..d.len() {
            d[k] = -z_new[k] + beta * d[k];
        }
        r = r_new;
        z = z_new;
        rz_prev = rz_new;
        trace.push((hooks.vol * j_core, l2(&r)));
    }

    let residual = l2(&r);
    if residual <= tol_abs {
        converged = true;
    }
    Ok(NcgOutcome { trace, iters, residual, converged })
}

/// Solves the periodic problem `div Θ(∇u) = div Θ(F)` by energy
/// minimization. Convergence is declared when the residual 2-norm falls
/// under `residual_tol · ‖div Θ(F)‖₂` (absolute when the source vanishes);
/// the mean-zero gauge is projected every iteration.
pub fn solve_periodic(nf: &NFunction, f: &VectorField, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    if !matches!(f.grid.topology(), Topology::Periodic) {
        return Err(Error::Grid("solve_periodic needs a periodic grid".into()));
    }
    let grid = f.grid.clone();
    let sp = Spectral::new(&grid)?;
    let f_scale = f.max_abs().max(1e-30);
    let floor = FLUX_FLOOR_REL * f_scale;
    let t = flux_field(nf, f, floor);
    let b = divergence(&t);
    let b_norm = l2(&b.values);
    let denom = if b_norm > 0.0 { b_norm } else { 1.0 };

    let mut u = match cfg.init {
        // the linear problem with the same source: recovers the potential
        // part of F, which is the exact minimizer whenever F is a gradient
        Init::Warm => sp.poisson_solve(&divergence(f)),
        Init::Zero => ScalarField::zeros(grid.clone()),
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..grid.node_count()).map(|_| rng.gen_range(-0.1..0.1)).collect();
            ScalarField { grid: grid.clone(), values }
        }
    };
    project_mean(&mut u.values);

    let grad_scale = gradient(&u).max_abs().max(f_scale);
    let hooks = NcgHooks {
        eval: Box::new(|u: &ScalarField, eps: f64| {
            let gu = gradient(u);
            let (j, r) = periodic_energy_and_residual(nf, &gu, &t, eps, floor);
            (j, gu, r)
        }),
        grad: Box::new(gradient),
        along: Box::new(|gu: &VectorField, gd: &VectorField, alpha: f64, eps: f64| {
            sample_energy_along(nf, gu, gd, Some(&t), alpha, eps)
        }),
        precond: Some(&sp),
        mask: None,
        project: true,
        alpha0: 1.0,
        vol: grid.cell_volume(),
    };

    let mut energy_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut total_iters = 0;
    let mut rel = f64::INFINITY;
    let mut converged = false;
    for (eps, tol, iters) in cfg.smoothing_ladder(grad_scale) {
        // a smoothing phase would pull an already-converged iterate away
        // from the target problem, so check the plain residual first
        let (j0, _, r0) = (hooks.eval)(&u, 0.0);
        rel = l2(&r0) / denom;
        if rel <= cfg.residual_tol {
            energy_trace.push(hooks.vol * j0);
            residual_trace.push(rel);
            converged = true;
            break;
        }
        let out = ncg_minimize(&hooks, &mut u, eps, tol * denom, iters, cfg)?;
        for (e, r) in out.trace {
            energy_trace.push(e);
            residual_trace.push(r / denom);
        }
        total_iters += out.iters;
        rel = out.residual / denom;
        converged = out.converged;
    }

    Ok(SolverReport {
        u,
        residual_norm: rel,
        energy_trace,
        residual_trace,
        iters: total_iters,
        converged,
    })
}

// ---------------------------------------------------------------------------
// ball problem
// ---------------------------------------------------------------------------

/// Corner-sampled cell structure on a ball grid. A cell is active when all
/// `2^n` of its corner nodes are inside the ball; a node is free when every
/// cell it touches is active, and the remaining in-ball nodes form the
/// pinned boundary ring.
struct BallCells {
    grid: Grid,
    cells: Vec<usize>,
    free_mask: Vec<bool>,
    /// For each corner id and axis: (plus-node offset, minus-node offset).
    corner_edges: Vec<Vec<(usize, usize)>>,
    corners: usize,
}

fn ball_cell_context(grid: &Grid) -> Result<BallCells> {
    let Topology::Ball { .. } = grid.topology() else {
        return Err(Error::Grid("cell context needs a ball grid".into()));
    };
    let n = grid.dim();
    let shape = grid.shape().to_vec();
    let strides = grid.strides();
    let count = grid.node_count();
    let corners = 1usize << n;

    let active: Vec<bool> = (0..count).map(|i| grid.node_active(i)).collect();

    // cell origins have room for the +1 corner on every axis
    let mut cell_active = vec![false; count];
    let mut cells = Vec::new();
    'cell: for flat in 0..count {
        let idx = grid.multi_index(flat);
        for d in 0..n {
            if idx[d] + 1 >= shape[d] {
                continue 'cell;
            }
        }
        for c in 0..corners {
            let mut off = 0;
            for d in 0..n {
                if c & (1 << d) != 0 {
                    off += strides[d];
                }
            }
            if !active[flat + off] {
                continue 'cell;
            }
        }
        cell_active[flat] = true;
        cells.push(flat);
    }

    let mut free_mask = vec![false; count];
    'node: for flat in 0..count {
        if !active[flat] {
            continue;
        }
        let idx = grid.multi_index(flat);
        for c in 0..corners {
            let mut origin = flat as isize;
            for d in 0..n {
                if c & (1 << d) != 0 {
                    if idx[d] == 0 {
                        continue 'node;
                    }
                    origin -= strides[d] as isize;
                }
            }
            if !cell_active[origin as usize] {
                continue 'node;
            }
        }
        free_mask[flat] = true;
    }

    let mut corner_edges = Vec::with_capacity(corners);
    for c in 0..corners {
        let mut edges = Vec::with_capacity(n);
        for d in 0..n {
            let plus = c | (1 << d);
            let minus = c & !(1 << d);
            let off = |corner: usize| -> usize {
                (0..n).map(|k| if corner & (1 << k) != 0 { strides[k] } else { 0 }).sum()
            };
            edges.push((off(plus), off(minus)));
        }
        corner_edges.push(edges);
    }

    Ok(BallCells { grid: grid.clone(), cells, free_mask, corner_edges, corners })
}

impl BallCells {
    /// Gradient samples per (cell, corner), streamed as component arrays of
    /// length `cells · corners`; the attached grid is metadata only.
    fn gradient_samples(&self, v: &ScalarField) -> VectorField {
        let n = self.grid.dim();
        let h = self.grid.spacing();
        let total = self.cells.len() * self.corners;
        let mut comps = vec![vec![0.0; total]; n];
        let mut slot = 0;
        for &cell in &self.cells {
            for c in 0..self.corners {
                for d in 0..n {
                    let (po, mo) = self.corner_edges[c][d];
                    comps[d][slot] = (v.values[cell + po] - v.values[cell + mo]) / h;
                }
                slot += 1;
            }
        }
        VectorField { grid: v.grid.clone(), comps }
    }

    /// Energy core `Σ_samples [A(m) - A(ε)] / 2^n` and its exact gradient
    /// with respect to the node values (unmasked).
    fn energy_and_residual(
        &self,
        nf: &NFunction,
        g: &VectorField,
        eps: f64,
        floor: f64,
    ) -> (f64, Vec<f64>) {
        let n = self.grid.dim();
        let h = self.grid.spacing();
        let w = 1.0 / self.corners as f64;
        let a_eps = if eps > 0.0 { nf.eval_raw(eps) } else { 0.0 };
        let mut acc = 0.0;
        let mut r = vec![0.0; self.grid.node_count()];
        let mut slot = 0;
        for &cell in &self.cells {
            for c in 0..self.corners {
                let mut m2 = eps * eps;
                for d in 0..n {
                    let gv = g.comps[d][slot];
                    m2 += gv * gv;
                }
                let m = m2.sqrt();
                acc += w * (nf.eval_raw(m) - a_eps);
                let s = if m > floor { nf.density(m) / m } else { 0.0 };
                if s != 0.0 {
                    for d in 0..n {
                        let contrib = w * s * g.comps[d][slot] / h;
                        let (po, mo) = self.corner_edges[c][d];
                        r[cell + po] += contrib;
                        r[cell + mo] -= contrib;
                    }
                }
                slot += 1;
            }
        }
        (acc, r)
    }

    /// Energy core weighted by `1/2^n`, matching `energy_and_residual`.
    fn energy_core(&self, nf: &NFunction, g: &VectorField, eps: f64) -> f64 {
        sample_energy(nf, g, None, eps) / self.corners as f64
    }

    fn energy_core_along(
        &self,
        nf: &NFunction,
        g: &VectorField,
        gd: &VectorField,
        alpha: f64,
        eps: f64,
    ) -> f64 {
        sample_energy_along(nf, g, gd, None, alpha, eps) / self.corners as f64
    }
}

/// Boundary-value energy `h^n/2^n Σ_cells Σ_corners A(|∇v|)` of a field on
/// a ball grid, with corner-sampled cell gradients.
pub fn ball_energy(nf: &NFunction, v: &ScalarField) -> Result<f64> {
    let ctx = ball_cell_context(&v.grid)?;
    let g = ctx.gradient_samples(v);
    Ok(v.grid.cell_volume() * ctx.energy_core(nf, &g, 0.0))
}

/// Exact derivative of `ball_energy / h^n` with respect to node values;
/// entries at pinned (non-free) nodes are zeroed.
pub fn ball_residual(nf: &NFunction, v: &ScalarField) -> Result<ScalarField> {
    let ctx = ball_cell_context(&v.grid)?;
    let g = ctx.gradient_samples(v);
    let scale = g.max_abs().max(1e-30);
    let (_, mut r) = ctx.energy_and_residual(nf, &g, 0.0, FLUX_FLOOR_REL * scale);
    for (val, &ok) in r.iter_mut().zip(&ctx.free_mask) {
        if !ok {
            *val = 0.0;
        }
    }
    Ok(ScalarField { grid: v.grid.clone(), values: r })
}

/// Free (interior, unpinned) nodes of a ball grid under the cell
/// classification used by the Dirichlet solver.
pub fn ball_free_nodes(grid: &Grid) -> Result<Vec<usize>> {
    let ctx = ball_cell_context(grid)?;
    Ok((0..grid.node_count()).filter(|&i| ctx.free_mask[i]).collect())
}

/// Solves the boundary-value problem: minimizes the gradient energy over
/// the ball interior with the boundary ring pinned to `boundary_data`.
/// The full `boundary_data` field doubles as the warm start.
pub fn solve_dirichlet_ball(
    nf: &NFunction,
    boundary_data: &ScalarField,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    let ctx = ball_cell_context(&boundary_data.grid)?;
    let grid = boundary_data.grid.clone();
    let n_free = ctx.free_mask.iter().filter(|&&b| b).count();
    if n_free == 0 {
        return Err(Error::Grid("ball grid has no free interior nodes".into()));
    }

    let mut v = boundary_data.clone();
    match cfg.init {
        Init::Warm => {}
        Init::Zero => {
            for (val, &ok) in v.values.iter_mut().zip(&ctx.free_mask) {
                if ok {
                    *val = 0.0;
                }
            }
        }
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amp = boundary_data.max_abs().max(1e-3);
            for (val, &ok) in v.values.iter_mut().zip(&ctx.free_mask) {
                if ok {
                    *val = rng.gen_range(-0.1..0.1) * amp;
                }
            }
        }
    }

    let g0 = ctx.gradient_samples(&v);
    let grad_scale = g0.max_abs().max(1e-30);
    let floor = FLUX_FLOOR_REL * grad_scale;
    // threshold normalization: the 2-norm of the per-sample flux
    // contributions the initial state feeds into the residual assembly
    let h = grid.spacing();
    let mut flux_norm2 = 0.0;
    for slot in 0..ctx.cells.len() * ctx.corners {
        let mut m2 = 0.0;
        for d in 0..grid.dim() {
            m2 += g0.comps[d][slot] * g0.comps[d][slot];
        }
        let a = nf.density(m2.sqrt()) / (h * ctx.corners as f64);
        flux_norm2 += a * a;
    }
    let (_, mut r0) = ctx.energy_and_residual(nf, &g0, 0.0, floor);
    for (val, &ok) in r0.iter_mut().zip(&ctx.free_mask) {
        if !ok {
            *val = 0.0;
        }
    }
    let denom = l2(&r0).max(flux_norm2.sqrt()).max(1e-300);

    let hooks = NcgHooks {
        eval: Box::new(|u: &ScalarField, eps: f64| {
            let g = ctx.gradient_samples(u);
            let (j, mut r) = ctx.energy_and_residual(nf, &g, eps, floor);
            for (val, &ok) in r.iter_mut().zip(&ctx.free_mask) {
                if !ok {
                    *val = 0.0;
                }
            }
            (j, g, r)
        }),
        grad: Box::new(|d: &ScalarField| ctx.gradient_samples(d)),
        along: Box::new(|gu: &VectorField, gd: &VectorField, alpha: f64, eps: f64| {
            ctx.energy_core_along(nf, gu, gd, alpha, eps)
        }),
        precond: None,
        mask: Some(&ctx.free_mask),
        project: false,
        alpha0: h * h,
        vol: grid.cell_volume(),
    };

    let mut energy_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut total_iters = 0;
    let mut rel = f64::INFINITY;
    let mut converged = false;
    for (eps, tol, iters) in cfg.smoothing_ladder(grad_scale) {
        let (j0, _, r0) = (hooks.eval)(&v, 0.0);
        rel = l2(&r0) / denom;
        if rel <= cfg.residual_tol {
            energy_trace.push(hooks.vol * j0);
            residual_trace.push(rel);
            converged = true;
            break;
        }
        let out = ncg_minimize(&hooks, &mut v, eps, tol * denom, iters, cfg)?;
        for (e, r) in out.trace {
            energy_trace.push(e);
            residual_trace.push(r / denom);
        }
        total_iters += out.iters;
        rel = out.residual / denom;
        converged = out.converged;
    }

    Ok(SolverReport {
        u: v,
        residual_norm: rel,
        energy_trace,
        residual_trace,
        iters: total_iters,
        converged,
    })
}
