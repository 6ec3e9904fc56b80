//! Stress tensors and the stretching term of the director equation.
//!
//! With `g = Δd − ∇W(d)` the non-Newtonian stress is
//! `T − S = −λ ∇d⊙∇d − αλ g⊗d + (1−α)λ d⊗g` and the stretching term is
//! `s = −α (∇u) d + (1−α) (∇u)ᵀ d`. For divergence-free `u` they satisfy
//! `∫ (T−S) : ∇u = λ ∫ (u·∇d + s) · g`, the cancellation behind the energy law.

use crate::fields::{odot, same_grid, FieldError, TensorField, VectorField};
use crate::scalar::{kron, mat_t_vec, mat_vec, Mat3, Scalar, Vec3};

/// Physical constants: viscosity `μ`, elastic ratio `λ`, relaxation `γ`, shape `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { mu: 1.0, lambda: 1.0, gamma: 1.0, alpha: 0.5 }
    }
}

impl ModelParams {
    /// Every violated constraint, one message per key.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (key, v) in [("model.mu", self.mu), ("model.lambda", self.lambda), ("model.gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{key} must be > 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            errs.push(format!("model.alpha must lie in [0, 1], got {}", self.alpha));
        }
        errs
    }
}

/// `μ (A + Aᵀ)`
#[inline]
pub fn viscous_at<T: Scalar>(a: &Mat3<T>, mu: T) -> Mat3<T> {
    let mut s = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = mu * (a[i][j] + a[j][i]);
        }
    }
    s
}

/// `−α A d + (1−α) Aᵀ d`
#[inline]
pub fn stretching_at<T: Scalar>(d: &Vec3<T>, a: &Mat3<T>, alpha: T) -> Vec3<T> {
    let ad = mat_vec(a, d);
    let atd = mat_t_vec(a, d);
    let beta = T::one() - alpha;
    [-alpha * ad[0] + beta * atd[0], -alpha * ad[1] + beta * atd[1], -alpha * ad[2] + beta * atd[2]]
}

/// `λ (−α g⊗d + (1−α) d⊗g)`, the part of `T − S` linear in `g`.
#[inline]
pub fn orientation_stress_at<T: Scalar>(d: &Vec3<T>, g: &Vec3<T>, lambda: T, alpha: T) -> Mat3<T> {
    let gd = kron(g, d);
    let dg = kron(d, g);
    let beta = T::one() - alpha;
    let mut m = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = lambda * (-alpha * gd[i][j] + beta * dg[i][j]);
        }
    }
    m
}

pub fn viscous_stress<T: Scalar>(grad_u: &TensorField<T>, mu: T) -> TensorField<T> {
    grad_u.map_points(|a| viscous_at(&a, mu))
}

/// `g = Δd − ∇W(d)`
pub fn molecular_field<T: Scalar>(lap_d: &VectorField<T>, grad_w: &VectorField<T>) -> Result<VectorField<T>, FieldError> {
    same_grid(&lap_d.grid, &grad_w.grid)?;
    Ok(lap_d.axpy(-T::one(), grad_w))
}

/// `T − S` from `d`, `∇d`, `Δd` and `∇W(d)`.
pub fn elastic_stress<T: Scalar>(
    d: &VectorField<T>,
    grad_d: &TensorField<T>,
    lap_d: &VectorField<T>,
    grad_w: &VectorField<T>,
    params: &ModelParams,
) -> Result<TensorField<T>, FieldError> {
    same_grid(&d.grid, &grad_d.grid)?;
    let g = molecular_field(lap_d, grad_w)?;
    same_grid(&d.grid, &g.grid)?;
    Ok(elastic_stress_from_g(d, grad_d, &g, params))
}

/// `T − S` with the molecular field `g` supplied directly.
pub fn elastic_stress_from_g<T: Scalar>(
    d: &VectorField<T>,
    grad_d: &TensorField<T>,
    g: &VectorField<T>,
    params: &ModelParams,
) -> TensorField<T> {
    let lambda = T::of(params.lambda);
    let alpha = T::of(params.alpha);
    let mut out = odot(grad_d);
    for idx in 0..d.grid.num_points() {
        let o = orientation_stress_at(&d.at(idx), &g.at(idx), lambda, alpha);
        for i in 0..3 {
            for j in 0..3 {
                let e = &mut out.comps[i][j][idx];
                *e = -lambda * *e + o[i][j];
            }
        }
    }
    out
}

pub fn stretching_term<T: Scalar>(d: &VectorField<T>, grad_u: &TensorField<T>, alpha: T) -> Result<VectorField<T>, FieldError> {
    same_grid(&d.grid, &grad_u.grid)?;
    let mut out = VectorField::zeros(&d.grid);
    for idx in 0..d.grid.num_points() {
        out.set(idx, stretching_at(&d.at(idx), &grad_u.at(idx), alpha));
    }
    Ok(out)
}

/// Pointwise `(u·∇) d = (∇d) u`.
pub fn transport<T: Scalar>(u: &VectorField<T>, grad_d: &TensorField<T>) -> Result<VectorField<T>, FieldError> {
    same_grid(&u.grid, &grad_d.grid)?;
    let mut out = VectorField::zeros(&u.grid);
    for idx in 0..u.grid.num_points() {
        out.set(idx, mat_vec(&grad_d.at(idx), &u.at(idx)));
    }
    Ok(out)
}
