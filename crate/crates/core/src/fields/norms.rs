use super::{FieldError, Fourier, Grid, ScalarField, Spectrum, TensorField, VectorField};
use crate::scalar::Scalar;

/// Pointwise magnitude: `|v|` for scalars, Euclidean for vectors, Frobenius for tensors.
pub trait Magnitudes<T> {
    fn grid(&self) -> &Grid;
    fn magnitudes(&self) -> Vec<T>;
}

impl<T: Scalar> Magnitudes<T> for ScalarField<T> {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn magnitudes(&self) -> Vec<T> {
        self.data.iter().map(|v| v.abs()).collect()
    }
}

impl<T: Scalar> Magnitudes<T> for VectorField<T> {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn magnitudes(&self) -> Vec<T> {
        (0..self.grid.num_points())
            .map(|i| {
                let v = self.at(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .collect()
    }
}

impl<T: Scalar> Magnitudes<T> for TensorField<T> {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn magnitudes(&self) -> Vec<T> {
        (0..self.grid.num_points())
            .map(|idx| {
                let mut s = T::zero();
                for i in 0..3 {
                    for j in 0..3 {
                        let v = self.comps[i][j][idx];
                        s = s + v * v;
                    }
                }
                s.sqrt()
            })
            .collect()
    }
}

/// Rectangle-rule `L^p` norm, `p ∈ [1, ∞]` (`f64::INFINITY` for the max norm).
pub fn lp_norm<T: Scalar, F: Magnitudes<T> + ?Sized>(field: &F, p: f64) -> Result<T, FieldError> {
    if p.is_nan() || p < 1.0 {
        return Err(FieldError::UnsupportedExponent(p));
    }
    let mags = field.magnitudes();
    if p.is_infinite() {
        return Ok(mags.into_iter().fold(T::zero(), T::max));
    }
    let w = T::of(field.grid().cell_volume());
    if p == 2.0 {
        let s: T = mags.iter().map(|&m| m * m).sum();
        return Ok((s * w).sqrt());
    }
    let pt = T::of(p);
    let s: T = mags.iter().map(|&m| m.powf(pt)).sum();
    Ok((s * w).powf(T::one() / pt))
}

/// `W^{1,2}` seminorm `‖∇v‖_{L²}` (spectral gradient).
pub fn sobolev_seminorm<T: Scalar>(fourier: &Fourier<T>, v: &VectorField<T>) -> Result<T, FieldError> {
    let g = fourier.gradient(v)?;
    lp_norm(&g, 2.0)
}

/// `(V Σ_k |c_k|² / (1 + |k|²))^{1/2}` for normalized coefficients `c_k`
/// (so that `v(x) = Σ_k c_k e^{ik·x}` and `‖v‖²_{L²} = V Σ_k |c_k|²`).
pub fn hminus1_norm_of_coefficients<T: Scalar>(fourier: &Fourier<T>, c: &Spectrum<T>) -> T {
    let mut s = T::zero();
    for comp in &c.comps {
        for (idx, v) in comp.iter().enumerate() {
            s = s + v.norm_sqr() / (T::one() + fourier.k_squared(idx));
        }
    }
    (s * T::of(fourier.grid().volume())).sqrt()
}

/// `‖v‖_{W^{-1,2}}` of a periodic field, computed from its spectrum.
pub fn hminus1_norm<T: Scalar>(fourier: &Fourier<T>, v: &VectorField<T>) -> Result<T, FieldError> {
    v.check_finite("v")?;
    super::same_grid(&v.grid, fourier.grid())?;
    let mut s = fourier.forward(v);
    let inv_n = T::one() / T::of_usize(v.grid.num_points());
    for comp in s.comps.iter_mut() {
        for c in comp.iter_mut() {
            *c = *c * inv_n;
        }
    }
    Ok(hminus1_norm_of_coefficients(fourier, &s))
}
