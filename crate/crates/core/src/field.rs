//! Uniform-grid scalar and vector fields on periodic boxes and discrete
//! balls, with the discrete gradient/divergence pair, ball averages, and
//! modular integrals.

use crate::error::{Error, Result};
use crate::nfunction::NFunction;

/// Domain topology. Periodic boxes wrap on every axis; ball grids are a
/// box-shaped lattice with an embedded ball (nodes are classified by center
/// containment).
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Periodic,
    Ball { center: Vec<f64>, radius: f64 },
}

/// Geometry descriptor for a uniform lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    shape: Vec<usize>,
    h: f64,
    /// Physical coordinate of node index 0 on each axis.
    origin: Vec<f64>,
    topology: Topology,
}

impl Grid {
    pub fn periodic(n: usize, resolution: usize, h: f64) -> Result<Grid> {
        if !(n == 2 || n == 3) {
            return Err(Error::Grid(format!("dimension must be 2 or 3, got {n}")));
        }
        if resolution < 4 || !(h > 0.0) {
            return Err(Error::Grid(format!(
                "periodic grid needs resolution >= 4 and h > 0, got ({resolution}, {h})"
            )));
        }
        Ok(Grid {
            n,
            shape: vec![resolution; n],
            h,
            origin: vec![0.0; n],
            topology: Topology::Periodic,
        })
    }

    /// Ball grid aligned with a parent lattice: nodes sit at
    /// `origin + index·h`, and the ball `|x - center| <= radius` classifies
    /// them. The box bounds the ball with a one-node margin.
    pub fn ball(center: &[f64], radius: f64, h: f64) -> Result<Grid> {
        let n = center.len();
        if !(n == 2 || n == 3) {
            return Err(Error::Grid(format!("dimension must be 2 or 3, got {n}")));
        }
        if !(h > 0.0) || radius < 4.0 * h {
            return Err(Error::Grid(format!("ball grid needs radius >= 4h, got r = {radius}, h = {h}")));
        }
        let mut shape = Vec::with_capacity(n);
        let mut origin = Vec::with_capacity(n);
        for d in 0..n {
            let lo = ((center[d] - radius) / h).floor() as i64 - 1;
            let hi = ((center[d] + radius) / h).ceil() as i64 + 1;
            shape.push((hi - lo + 1) as usize);
            origin.push(lo as f64 * h);
        }
        Ok(Grid {
            n,
            shape,
            h,
            origin,
            topology: Topology::Ball { center: center.to_vec(), radius },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Box side length along an axis.
    pub fn extent(&self, axis: usize) -> f64 {
        self.shape[axis] as f64 * self.h
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Cell volume `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![0; self.n];
        let mut acc = 1;
        for d in (0..self.n).rev() {
            s[d] = acc;
            acc *= self.shape[d];
        }
        s
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    /// Multi-index of a flat node index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut idx = vec![0; self.n];
        for d in 0..self.n {
            idx[d] = flat / strides[d];
            flat %= strides[d];
        }
        idx
    }

    /// Physical coordinates of a node, written into `out`.
    pub fn coords_into(&self, flat: usize, out: &mut [f64]) {
        let idx = self.multi_index(flat);
        for d in 0..self.n {
            out[d] = self.origin[d] + idx[d] as f64 * self.h;
        }
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.coords_into(flat, &mut out);
        out
    }

    /// Whether a node belongs to the active domain (always true on periodic
    /// grids; center containment on ball grids).
    pub fn node_active(&self, flat: usize) -> bool {
        match &self.topology {
            Topology::Periodic => true,
            Topology::Ball { center, radius } => {
                let x = self.coords(flat);
                dist2(&x, center) <= radius * radius
            }
        }
    }

    /// Flat indices of all active nodes.
    pub fn active_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.node_active(i)).collect()
    }

    /// Minimal-image displacement between two points on a periodic box;
    /// plain difference otherwise.
    fn displacement(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for d in 0..self.n {
            let mut dx = x[d] - y[d];
            if matches!(self.topology, Topology::Periodic) {
                let ext = self.extent(d);
                dx -= ext * (dx / ext).round();
            }
            out[d] = dx;
        }
    }

    /// Flat indices of active nodes whose centers lie in the ball
    /// `B_r(x0)`. On periodic boxes the pre-condition `r < L/2` applies and
    /// distances are minimal-image.
    pub fn ball_nodes(&self, x0: &[f64], r: f64) -> Result<Vec<usize>> {
        if x0.len() != self.n {
            return Err(Error::Grid("ball center has wrong dimension".into()));
        }
        if !(r > 0.0) {
            return Err(Error::Grid(format!("ball radius must be positive, got {r}")));
        }
        if matches!(self.topology, Topology::Periodic) {
            let min_ext = (0..self.n).map(|d| self.extent(d)).fold(f64::INFINITY, f64::min);
            if r >= 0.5 * min_ext {
                return Err(Error::Grid(format!(
                    "periodic ball radius must satisfy r < L/2, got r = {r}, L = {min_ext}"
                )));
            }
        }
        let mut out = Vec::new();
        let mut x = vec![0.0; self.n];
        let mut dx = vec![0.0; self.n];
        for flat in 0..self.node_count() {
            if !self.node_active(flat) {
                continue;
            }
            self.coords_into(flat, &mut x);
            self.displacement(&x, x0, &mut dx);
            if dx.iter().map(|v| v * v).sum::<f64>() <= r * r {
                out.push(flat);
            }
        }
        Ok(out)
    }
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Grid(format!(
                "value count {} does not match grid with {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("scalar field has non-finite values".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.node_count();
        ScalarField { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.node_count()];
        let mut x = vec![0.0; grid.dim()];
        for (flat, v) in values.iter_mut().enumerate() {
            grid.coords_into(flat, &mut x);
            *v = f(&x);
        }
        ScalarField { grid, values }
    }

    /// Mean over all nodes (active nodes on ball grids).
    pub fn mean(&self) -> f64 {
        match &self.grid.topology {
            Topology::Periodic => self.values.iter().sum::<f64>() / self.values.len() as f64,
            Topology::Ball { .. } => {
                let act = self.grid.active_nodes();
                act.iter().map(|&i| self.values[i]).sum::<f64>() / act.len() as f64
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Vector field stored per component.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(Error::Grid("component count must equal grid dimension".into()));
        }
        for c in &comps {
            if c.len() != grid.node_count() {
                return Err(Error::Grid("component length does not match grid".into()));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Grid("vector field has non-finite values".into()));
            }
        }
        Ok(VectorField { grid, comps })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.node_count();
        let d = grid.dim();
        VectorField { grid, comps: vec![vec![0.0; n]; d] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let n = grid.node_count();
        let d = grid.dim();
        let mut comps = vec![vec![0.0; n]; d];
        let mut x = vec![0.0; d];
        for flat in 0..n {
            grid.coords_into(flat, &mut x);
            let v = f(&x);
            for k in 0..d {
                comps[k][flat] = v[k];
            }
        }
        VectorField { grid, comps }
    }

    pub fn magnitude_at(&self, flat: usize) -> f64 {
        self.comps.iter().map(|c| c[flat] * c[flat]).sum::<f64>().sqrt()
    }

    /// Scalar field of pointwise magnitudes.
    pub fn magnitude(&self) -> ScalarField {
        let n = self.grid.node_count();
        let mut values = vec![0.0; n];
        for (flat, v) in values.iter_mut().enumerate() {
            *v = self.magnitude_at(flat);
        }
        ScalarField { grid: self.grid.clone(), values }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Neighbor stencil bookkeeping shared by gradient and divergence: returns
/// `(plus, minus, inv_denominator)` for differentiating along `axis` at
/// `flat`, or `None` when no in-domain neighbor exists.
fn stencil(grid: &Grid, flat: usize, axis: usize) -> Option<(usize, usize, f64)> {
    let strides = grid.strides();
    let idx = grid.multi_index(flat);
    let m = grid.shape[axis];
    match &grid.topology {
        Topology::Periodic => {
            let plus = if idx[axis] + 1 == m { flat + strides[axis] - m * strides[axis] } else { flat + strides[axis] };
            let minus = if idx[axis] == 0 { flat + (m - 1) * strides[axis] } else { flat - strides[axis] };
            Some((plus, minus, 0.5 / grid.h))
        }
        Topology::Ball { .. } => {
            if !grid.node_active(flat) {
                return None;
            }
            let plus_ok = idx[axis] + 1 < m && grid.node_active(flat + strides[axis]);
            let minus_ok = idx[axis] > 0 && grid.node_active(flat - strides[axis]);
            match (plus_ok, minus_ok) {
                (true, true) => Some((flat + strides[axis], flat - strides[axis], 0.5 / grid.h)),
                (true, false) => Some((flat + strides[axis], flat, 1.0 / grid.h)),
                (false, true) => Some((flat, flat - strides[axis], 1.0 / grid.h)),
                (false, false) => None,
            }
        }
    }
}

/// Applies the centered periodic difference along one axis:
/// `out[i] (+)= (src[i+e] - src[i-e]) / 2h`, allocation-free.
fn centered_diff_periodic(grid: &Grid, axis: usize, src: &[f64], out: &mut [f64], accumulate: bool) {
    let strides = grid.strides();
    let m = grid.shape[axis];
    let stride = strides[axis];
    let inv = 0.5 / grid.h;
    let blocks = grid.node_count() / (m * stride);
    for b in 0..blocks {
        let base = b * m * stride;
        for j in 0..m {
            let row = base + j * stride;
            let plus = if j + 1 == m { base } else { row + stride };
            let minus = if j == 0 { base + (m - 1) * stride } else { row - stride };
            for lo in 0..stride {
                let v = (src[plus + lo] - src[minus + lo]) * inv;
                if accumulate {
                    out[row + lo] += v;
                } else {
                    out[row + lo] = v;
                }
            }
        }
    }
}

/// Discrete gradient: centered second-order differences with periodic wrap;
/// on ball grids, centered where both axis neighbors are in the ball and
/// first-order one-sided on the boundary ring.
pub fn gradient(u: &ScalarField) -> VectorField {
    let grid = &u.grid;
    let n = grid.node_count();
    let d = grid.dim();
    let mut comps = vec![vec![0.0; n]; d];
    match &grid.topology {
        Topology::Periodic => {
            for axis in 0..d {
                centered_diff_periodic(grid, axis, &u.values, &mut comps[axis], false);
            }
        }
        Topology::Ball { .. } => {
            for axis in 0..d {
                for flat in 0..n {
                    if let Some((p, m, inv)) = stencil(grid, flat, axis) {
                        comps[axis][flat] = (u.values[p] - u.values[m]) * inv;
                    }
                }
            }
        }
    }
    VectorField { grid: grid.clone(), comps }
}

/// Discrete divergence with the same stencils, so that on periodic topology
/// `<div V, u> = -<V, grad u>` holds to machine precision.
pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = &v.grid;
    let n = grid.node_count();
    let mut values = vec![0.0; n];
    match &grid.topology {
        Topology::Periodic => {
            for axis in 0..grid.dim() {
                centered_diff_periodic(grid, axis, &v.comps[axis], &mut values, true);
            }
        }
        Topology::Ball { .. } => {
            for axis in 0..grid.dim() {
                for (flat, val) in values.iter_mut().enumerate() {
                    if let Some((p, m, inv)) = stencil(grid, flat, axis) {
                        *val += (v.comps[axis][p] - v.comps[axis][m]) * inv;
                    }
                }
            }
        }
    }
    ScalarField { grid: grid.clone(), values }
}

/// Mean of scalar node values over `B_r(x0)`.
pub fn ball_average(f: &ScalarField, x0: &[f64], r: f64) -> Result<f64> {
    let nodes = f.grid.ball_nodes(x0, r)?;
    if nodes.is_empty() {
        return Err(Error::Grid(format!("ball at {x0:?} with r = {r} contains no nodes")));
    }
    Ok(nodes.iter().map(|&i| f.values[i]).sum::<f64>() / nodes.len() as f64)
}

/// Componentwise ball mean of a vector field.
pub fn ball_average_vector(v: &VectorField, x0: &[f64], r: f64) -> Result<Vec<f64>> {
    let nodes = v.grid.ball_nodes(x0, r)?;
    if nodes.is_empty() {
        return Err(Error::Grid(format!("ball at {x0:?} with r = {r} contains no nodes")));
    }
    let inv = 1.0 / nodes.len() as f64;
    Ok(v.comps.iter().map(|c| nodes.iter().map(|&i| c[i]).sum::<f64>() * inv).collect())
}

/// Modular integral `h^n Σ A(|V|)` over active nodes.
pub fn modular(nf: &NFunction, v: &VectorField) -> f64 {
    let vol = v.grid.cell_volume();
    let mut acc = 0.0;
    for flat in 0..v.grid.node_count() {
        if v.grid.node_active(flat) {
            acc += nf.eval_raw(v.magnitude_at(flat));
        }
    }
    vol * acc
}

/// Modular integral `h^n Σ A(|f|)` of a scalar field over active nodes.
pub fn modular_scalar(nf: &NFunction, f: &ScalarField) -> f64 {
    let vol = f.grid.cell_volume();
    let mut acc = 0.0;
    for (flat, &val) in f.values.iter().enumerate() {
        if f.grid.node_active(flat) {
            acc += nf.eval_raw(val.abs());
        }
    }
    vol * acc
}

/// `h^n Σ g(node)` over an explicit node list; the common kernel behind the
/// per-ball integrals of the comparison experiments.
pub fn sum_over_nodes(grid: &Grid, nodes: &[usize], g: impl Fn(usize) -> f64) -> f64 {
    grid.cell_volume() * nodes.iter().map(|&i| g(i)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::NFunction;
    use crate::numerics::compensated_sum;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_scalar(grid: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ScalarField::new(grid, values).unwrap()
    }

    fn random_vector(grid: Grid, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.node_count();
        let comps = (0..grid.dim())
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        VectorField::new(grid, comps).unwrap()
    }

    #[test]
    fn grid_invariants_are_enforced() {
        assert!(Grid::periodic(4, 16, 0.1).is_err());
        assert!(Grid::periodic(2, 3, 0.1).is_err());
        assert!(Grid::periodic(2, 8, 0.0).is_err());
        assert!(Grid::ball(&[0.0, 0.0], 0.3, 0.1).is_err());
        assert!(Grid::ball(&[0.0, 0.0], 0.5, 0.1).is_ok());
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let grid = Grid::periodic(2, 16, 0.25).unwrap();
        let u = ScalarField::from_fn(grid, |_| 5.0);
        let g = gradient(&u);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn gradient_of_sine_is_second_order() {
        let mut errs = Vec::new();
        for res in [16, 32, 64] {
            let l = 1.0;
            let h = l / res as f64;
            let grid = Grid::periodic(2, res, h).unwrap();
            let u = ScalarField::from_fn(grid, |x| (2.0 * PI * x[0] / l).sin());
            let g = gradient(&u);
            let mut err = 0.0f64;
            for flat in 0..u.grid.node_count() {
                let x = u.grid.coords(flat);
                let exact = (2.0 * PI / l) * (2.0 * PI * x[0] / l).cos();
                err = err.max((g.comps[0][flat] - exact).abs());
            }
            errs.push(err);
        }
        // halving h divides the error by about 4
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
        assert!(errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn gradient_exact_on_linear_ball_field() {
        let grid = Grid::ball(&[0.0, 0.0], 1.0, 0.1).unwrap();
        let u = ScalarField::from_fn(grid, |x| 2.0 * x[0] - 3.0 * x[1]);
        let g = gradient(&u);
        for flat in 0..u.grid.node_count() {
            if !u.grid.node_active(flat) {
                continue;
            }
            if let Some(_) = stencil(&u.grid, flat, 0) {
                assert!((g.comps[0][flat] - 2.0).abs() < 1e-12);
            }
            if let Some(_) = stencil(&u.grid, flat, 1) {
                assert!((g.comps[1][flat] + 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn divergence_of_constant_vanishes() {
        let grid = Grid::periodic(3, 8, 0.5).unwrap();
        let v = VectorField::from_fn(grid, |_| vec![1.0, -2.0, 0.5]);
        let d = divergence(&v);
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn divergence_is_negative_adjoint_of_gradient() {
        let grid = Grid::periodic(2, 12, 0.3).unwrap();
        let u = random_scalar(grid.clone(), 1);
        let v = random_vector(grid, 2);
        let gu = gradient(&u);
        let dv = divergence(&v);
        let lhs: f64 = dv.values.iter().zip(&u.values).map(|(a, b)| a * b).sum();
        let rhs: f64 = (0..u.grid.node_count())
            .map(|i| (0..2).map(|k| v.comps[k][i] * gu.comps[k][i]).sum::<f64>())
            .sum();
        assert!((lhs + rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn divergence_of_gradient_matches_spectral_symbol() {
        // a single Fourier mode is an eigenvector of div∘grad with eigenvalue
        // -(sin(k h 2π/L)/h)² per axis
        let res = 32;
        let l = 2.0;
        let h = l / res as f64;
        let grid = Grid::periodic(2, res, h).unwrap();
        let (k1, k2) = (3.0, 5.0);
        let u = ScalarField::from_fn(grid, |x| {
            (2.0 * PI * k1 * x[0] / l).sin() * (2.0 * PI * k2 * x[1] / l).cos()
        });
        let lap = divergence(&gradient(&u));
        let s1 = (2.0 * PI * k1 / res as f64).sin() / h;
        let s2 = (2.0 * PI * k2 / res as f64).sin() / h;
        let eig = -(s1 * s1 + s2 * s2);
        for flat in 0..u.grid.node_count() {
            assert!(
                (lap.values[flat] - eig * u.values[flat]).abs() < 1e-10 * eig.abs(),
                "node {flat}"
            );
        }
    }

    #[test]
    fn ball_average_of_constant_and_linear() {
        let grid = Grid::periodic(2, 32, 1.0 / 32.0).unwrap();
        let c = ScalarField::from_fn(grid.clone(), |_| 4.2);
        let v = ball_average(&c, &[0.5, 0.5], 0.2).unwrap();
        assert!((v - 4.2).abs() < 1e-14);
        // odd part cancels on a lattice-symmetric ball centered at a node
        let lin = ScalarField::from_fn(grid, |x| 3.0 * (x[0] - 0.5));
        let v = ball_average(&lin, &[0.5, 0.5], 0.2).unwrap();
        assert!(v.abs() < 1e-12, "got {v}");
    }

    #[test]
    fn ball_average_matches_monte_carlo_for_smooth_bump() {
        let res = 64;
        let h = 1.0 / res as f64;
        let grid = Grid::periodic(2, res, h).unwrap();
        let bump = |x: &[f64]| (-((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)) / 0.02).exp();
        let f = ScalarField::from_fn(grid, bump);
        let (x0, r) = ([0.55, 0.45], 0.21);
        let avg = ball_average(&f, &x0, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut acc = 0.0;
        let mut count = 0usize;
        while count < 1_000_000 {
            let x = [x0[0] + rng.gen_range(-r..r), x0[1] + rng.gen_range(-r..r)];
            if (x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2) <= r * r {
                acc += bump(&x);
                count += 1;
            }
        }
        let mc = acc / count as f64;
        // Lipschitz constant of the bump is ~ max |∇| ≈ 4.3
        let tol = 2.0 * h * 4.3;
        assert!((avg - mc).abs() < tol, "avg {avg} mc {mc}");
    }

    #[test]
    fn ball_average_rejects_oversized_radius() {
        let grid = Grid::periodic(2, 16, 1.0 / 16.0).unwrap();
        let f = ScalarField::zeros(grid);
        assert!(ball_average(&f, &[0.5, 0.5], 0.6).is_err());
    }

    #[test]
    fn modular_known_values_and_oracle() {
        let grid = Grid::periodic(2, 16, 0.25).unwrap();
        let nf = NFunction::power(2.0).unwrap();
        let z = VectorField::zeros(grid.clone());
        assert_eq!(modular(&nf, &z), 0.0);
        // unit-magnitude field: h² · N · A(1) = h² · N / 2
        let ones = VectorField::from_fn(grid.clone(), |_| vec![1.0, 0.0]);
        let n = grid.node_count() as f64;
        assert!((modular(&nf, &ones) - 0.25 * 0.25 * n * 0.5).abs() < 1e-12);
        // random field vs compensated two-pass summation
        let v = random_vector(grid, 3);
        let m = modular(&nf, &v);
        let oracle = 0.25 * 0.25
            * compensated_sum((0..v.grid.node_count()).map(|i| {
                let r = v.magnitude_at(i);
                nf.eval_raw(r)
            }));
        assert!((m - oracle).abs() <= 1e-12 * oracle.abs().max(1e-300));
    }

    #[test]
    fn discrete_jensen_for_ball_means() {
        let grid = Grid::periodic(2, 24, 1.0 / 24.0).unwrap();
        let nf = NFunction::power(3.0).unwrap();
        let v = random_vector(grid, 7);
        for (x0, r) in [([0.4, 0.6], 0.15), ([0.5, 0.5], 0.3), ([0.2, 0.8], 0.1)] {
            let nodes = v.grid.ball_nodes(&x0, r).unwrap();
            let mean = ball_average_vector(&v, &x0, r).unwrap();
            let mean_mag = mean.iter().map(|c| c * c).sum::<f64>().sqrt();
            let lhs = nf.eval(mean_mag).unwrap();
            let rhs = nodes.iter().map(|&i| nf.eval_raw(v.magnitude_at(i))).sum::<f64>()
                / nodes.len() as f64;
            assert!(lhs <= rhs + 1e-12, "x0 {x0:?} r {r}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn modular_and_ball_average_converge_under_refinement() {
        let nf = NFunction::power(2.0).unwrap();
        let smooth = |x: &[f64]| {
            vec![(2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos(), (2.0 * PI * x[1]).sin()]
        };
        // continuum modular of the first test field: ∫ A(|V|) over the unit
        // torus; compute reference at a fine resolution
        let reference = {
            let grid = Grid::periodic(2, 256, 1.0 / 256.0).unwrap();
            modular(&nf, &VectorField::from_fn(grid, smooth))
        };
        let mut prev_err = f64::INFINITY;
        for res in [16, 32, 64] {
            let grid = Grid::periodic(2, res, 1.0 / res as f64).unwrap();
            let m = modular(&nf, &VectorField::from_fn(grid, smooth));
            let err = (m - reference).abs();
            assert!(err < prev_err.max(1e-14), "res {res}: {err} vs {prev_err}");
            prev_err = err;
        }
    }
}
