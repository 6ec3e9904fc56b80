//! Structured-grid fields, the periodic spectral toolkit, and norms.
//!
//! Velocity and director are always three-component vectors. A `dim = 2` grid
//! stores an `n0 × n1` array and treats every field as constant along the
//! third axis.
//!
//! Gradients follow the convention `(∇v)_ij = ∂_j v_i`, so that `(∇u) d`
//! is the directional derivative `(d·∇) u`. Row `i` of a [`TensorField`] is
//! the gradient of component `i`.

mod fourier;
mod norms;

pub use fourier::{Fourier, Spectrum};
pub use norms::{hminus1_norm, hminus1_norm_of_coefficients, lp_norm, sobolev_seminorm, Magnitudes};

use thiserror::Error;

use crate::scalar::{Mat3, Scalar, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in component {component}")]
    NonFinite { component: String },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("unsupported exponent p = {0}; expected p in [1, inf]")]
    UnsupportedExponent(f64),
    #[error("mode cutoff {cutoff} out of range (Nyquist index {nyquist})")]
    CutoffOutOfRange { cutoff: usize, nyquist: usize },
}

/// Uniform, axis-aligned box `[0, L0) × [0, L1) (× [0, L2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    len: [f64; 3],
}

impl Grid {
    /// `n` and `len` must each hold one entry per active axis (or a single
    /// entry, broadcast to every axis).
    pub fn new(dim: usize, n: &[usize], len: &[f64]) -> Result<Self, FieldError> {
        if dim != 2 && dim != 3 {
            return Err(FieldError::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        let pick_n = |a: usize| -> Option<usize> {
            match n.len() {
                1 => Some(n[0]),
                l if l == dim => Some(n[a]),
                _ => None,
            }
        };
        let pick_len = |a: usize| -> Option<f64> {
            match len.len() {
                1 => Some(len[0]),
                l if l == dim => Some(len[a]),
                _ => None,
            }
        };
        let mut sizes = [1usize; 3];
        let mut lengths = [1.0f64; 3];
        for a in 0..dim {
            let na = pick_n(a).ok_or_else(|| {
                FieldError::InvalidGrid(format!("expected 1 or {dim} sizes, got {}", n.len()))
            })?;
            let la = pick_len(a).ok_or_else(|| {
                FieldError::InvalidGrid(format!("expected 1 or {dim} lengths, got {}", len.len()))
            })?;
            if na < 4 || !na.is_power_of_two() {
                return Err(FieldError::InvalidGrid(format!(
                    "points per axis must be a power of two >= 4, got {na} on axis {a}"
                )));
            }
            if !(la.is_finite() && la > 0.0) {
                return Err(FieldError::InvalidGrid(format!(
                    "box length must be positive, got {la} on axis {a}"
                )));
            }
            sizes[a] = na;
            lengths[a] = la;
        }
        if dim == 2 {
            lengths[2] = std::f64::consts::TAU;
        }
        Ok(Grid { dim, n: sizes, len: lengths })
    }

    /// `n^dim` points on the `2π`-periodic box.
    pub fn torus(dim: usize, n: usize) -> Result<Self, FieldError> {
        Self::new(dim, &[n], &[std::f64::consts::TAU])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis; inactive axes report 1.
    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.len[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.len[axis] / self.n[axis] as f64
    }

    pub fn num_points(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Quadrature weight of one grid point (area in 2D, volume in 3D).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Measure of the box (area in 2D).
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.len[a]).product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n[2];
        let rest = idx / self.n[2];
        [rest / self.n[1], rest % self.n[1], k]
    }

    /// Physical coordinates of point `idx` (`x_a = i_a h_a`).
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = m[a] as f64 * self.spacing(a);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub grid: Grid,
    pub data: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { grid: grid.clone(), data: vec![T::zero(); grid.num_points()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.num_points()).map(|i| T::of(f(grid.coords(i)))).collect();
        ScalarField { grid: grid.clone(), data }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn mean(&self) -> T {
        let s: T = self.data.iter().copied().sum();
        s / T::of_usize(self.data.len())
    }
}

/// Three-component field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    pub grid: Grid,
    pub comps: [Vec<T>; 3],
}

impl<T: Scalar> VectorField<T> {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.num_points();
        VectorField { grid: grid.clone(), comps: [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]] }
    }

    pub fn constant(grid: &Grid, value: Vec3<T>) -> Self {
        let n = grid.num_points();
        VectorField {
            grid: grid.clone(),
            comps: [vec![value[0]; n], vec![value[1]; n], vec![value[2]; n]],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut v = Self::zeros(grid);
        for idx in 0..grid.num_points() {
            let val = f(grid.coords(idx));
            for c in 0..3 {
                v.comps[c][idx] = T::of(val[c]);
            }
        }
        v
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Vec3<T> {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: Vec3<T>) {
        for c in 0..3 {
            self.comps[c][idx] = v[c];
        }
    }

    pub fn map_points(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        let mut out = Self::zeros(&self.grid);
        for idx in 0..self.grid.num_points() {
            out.set(idx, f(self.at(idx)));
        }
        out
    }

    /// `self + s * other`
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        let mut out = self.clone();
        for c in 0..3 {
            for (o, &b) in out.comps[c].iter_mut().zip(&other.comps[c]) {
                *o = *o + s * b;
            }
        }
        out
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map_points(|v| [v[0] * s, v[1] * s, v[2] * s])
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Rectangle-rule `∫ a·b`.
    pub fn inner(&self, other: &Self) -> T {
        let mut s = T::zero();
        for c in 0..3 {
            for (&a, &b) in self.comps[c].iter().zip(&other.comps[c]) {
                s = s + a * b;
            }
        }
        s * T::of(self.grid.cell_volume())
    }

    pub fn check_finite(&self, name: &str) -> Result<(), FieldError> {
        for (c, comp) in self.comps.iter().enumerate() {
            if comp.iter().any(|v| !v.is_finite()) {
                return Err(FieldError::NonFinite { component: format!("{name}[{c}]") });
            }
        }
        Ok(())
    }
}

/// 3×3-matrix-valued field; `comps[i][j]` holds entry `(i, j)` at every point.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField<T> {
    pub grid: Grid,
    pub comps: [[Vec<T>; 3]; 3],
}

impl<T: Scalar> TensorField<T> {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.num_points();
        let row = || [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
        TensorField { grid: grid.clone(), comps: [row(), row(), row()] }
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Mat3<T> {
        let mut m = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.comps[i][j][idx];
            }
        }
        m
    }

    #[inline]
    pub fn set(&mut self, idx: usize, m: Mat3<T>) {
        for i in 0..3 {
            for j in 0..3 {
                self.comps[i][j][idx] = m[i][j];
            }
        }
    }

    pub fn map_points(&self, f: impl Fn(Mat3<T>) -> Mat3<T>) -> Self {
        let mut out = Self::zeros(&self.grid);
        for idx in 0..self.grid.num_points() {
            out.set(idx, f(self.at(idx)));
        }
        out
    }

    /// `∇ᵀ`: swaps the entry arrays without recomputing anything.
    pub fn transpose(&self) -> Self {
        let mut out = self.clone();
        for i in 0..3 {
            for j in 0..3 {
                out.comps[i][j] = self.comps[j][i].clone();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for i in 0..3 {
            for j in 0..3 {
                for (o, &b) in out.comps[i][j].iter_mut().zip(&other.comps[i][j]) {
                    *o = *o + b;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|r| r.iter())
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Rectangle-rule `∫ A : B`.
    pub fn contract_integral(&self, other: &Self) -> T {
        let mut s = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                for (&a, &b) in self.comps[i][j].iter().zip(&other.comps[i][j]) {
                    s = s + a * b;
                }
            }
        }
        s * T::of(self.grid.cell_volume())
    }

    pub fn check_finite(&self, name: &str) -> Result<(), FieldError> {
        for i in 0..3 {
            for j in 0..3 {
                if self.comps[i][j].iter().any(|v| !v.is_finite()) {
                    return Err(FieldError::NonFinite { component: format!("{name}[{i}][{j}]") });
                }
            }
        }
        Ok(())
    }
}

/// Pointwise `(∇d ⊙ ∇d)_ij = ∂_i d · ∂_j d` from `grad_d` (with `(∇d)_ki = ∂_i d_k`).
pub fn odot<T: Scalar>(grad_d: &TensorField<T>) -> TensorField<T> {
    grad_d.map_points(|g| {
        let mut m = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v = g[0][i] * g[0][j] + g[1][i] * g[1][j] + g[2][i] * g[2][j];
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    })
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<(), FieldError> {
    if a == b {
        Ok(())
    } else {
        Err(FieldError::GridMismatch)
    }
}
