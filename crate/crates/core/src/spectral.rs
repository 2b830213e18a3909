//! FFT machinery on periodic grids: forward/inverse transforms per axis, the
//! symbol of the centered-difference Laplacian, and direct Poisson solves
//! used both as solver preconditioner and as the linear-case oracle.

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, Topology};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Spectral {
    shape: Vec<usize>,
    strides: Vec<usize>,
    h: f64,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// `-λ(k)` of the centered-difference Laplacian: `Σ_d sin²(θ_d)/h²`,
    /// flattened row-major; zero entries mark the nullspace (constant and
    /// Nyquist checkerboard modes) that centered differences cannot see.
    neg_symbol: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Result<Self> {
        if !matches!(grid.topology(), Topology::Periodic) {
            return Err(Error::Grid("spectral transforms need a periodic grid".into()));
        }
        let shape = grid.shape().to_vec();
        let strides = grid.strides();
        let h = grid.spacing();
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&m| planner.plan_fft_forward(m)).collect();
        let inverse = shape.iter().map(|&m| planner.plan_fft_inverse(m)).collect();

        let count: usize = shape.iter().product();
        let mut neg_symbol = vec![0.0; count];
        let n = shape.len();
        let mut idx = vec![0usize; n];
        for (flat, sym) in neg_symbol.iter_mut().enumerate() {
            let mut rem = flat;
            for d in 0..n {
                idx[d] = rem / strides[d];
                rem %= strides[d];
            }
            let mut acc = 0.0;
            for d in 0..n {
                let theta = 2.0 * std::f64::consts::PI * idx[d] as f64 / shape[d] as f64;
                let s = theta.sin() / h;
                acc += s * s;
            }
            // sin(π) evaluates to ~1e-16, so Nyquist modes get a roundoff
            // symbol; snap anything below the roundoff floor to an exact zero
            *sym = if acc < 1e-24 / (h * h) { 0.0 } else { acc };
        }
        Ok(Spectral { shape, strides, h, forward, inverse, neg_symbol })
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    fn transform(&self, data: &mut [Complex<f64>], plans: &[Arc<dyn Fft<f64>>]) {
        let n = self.shape.len();
        for d in 0..n {
            let m = self.shape[d];
            let stride = self.strides[d];
            let mut line = vec![Complex::new(0.0, 0.0); m];
            let lines = data.len() / m;
            for l in 0..lines {
                // first node of the l-th line along axis d
                let block = l / stride;
                let offset = l % stride;
                let base = block * stride * m + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                plans[d].process(&mut line);
                for (j, val) in line.iter().enumerate() {
                    data[base + j * stride] = *val;
                }
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    pub fn inverse_re(&self, mut data: Vec<Complex<f64>>) -> Vec<f64> {
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }

    /// Applies `(-Δ_h)^{-1}` with the nullspace projected out. Symmetric
    /// positive definite on the complement of the nullspace, which is where
    /// divergence-form residuals live.
    pub fn apply_inverse_laplacian(&self, values: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (c, &s) in spec.iter_mut().zip(&self.neg_symbol) {
            if s > 0.0 {
                *c /= s;
            } else {
                *c = Complex::new(0.0, 0.0);
            }
        }
        self.inverse_re(spec)
    }

    /// Direct solve of the discrete Poisson problem `div grad u = rhs` with
    /// zero-mean gauge; `rhs` must be orthogonal to the nullspace (true for
    /// any discrete divergence).
    pub fn poisson_solve(&self, rhs: &ScalarField) -> ScalarField {
        let mut spec = self.forward(&rhs.values);
        for (c, &s) in spec.iter_mut().zip(&self.neg_symbol) {
            if s > 0.0 {
                *c /= -s;
            } else {
                *c = Complex::new(0.0, 0.0);
            }
        }
        let values = self.inverse_re(spec);
        ScalarField { grid: rhs.grid.clone(), values }
    }
}
