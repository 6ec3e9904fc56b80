use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{FieldError, Grid, ScalarField, TensorField, VectorField};
use crate::scalar::Scalar;

/// Unnormalized DFT coefficients of a vector field (`v̂_k = Σ_x v(x) e^{-ik·x}`).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub grid: Grid,
    pub comps: [Vec<Complex<T>>; 3],
}

impl<T: Scalar> Spectrum<T> {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.num_points();
        let z = Complex::new(T::zero(), T::zero());
        Spectrum { grid: grid.clone(), comps: [vec![z; n], vec![z; n], vec![z; n]] }
    }

    /// `self + s * other`, in place.
    pub fn add_scaled(&mut self, s: T, other: &Self) {
        for c in 0..3 {
            for (a, &b) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *a = *a + b * s;
            }
        }
    }
}

type Plan<T> = Arc<dyn Fft<T>>;

/// FFT plans and wavenumber tables for one periodic grid.
///
/// Derivative symbols use `i k` with the Nyquist wavenumber zeroed; the
/// Laplacian symbol `-|k|²` keeps it.
pub struct Fourier<T: Scalar> {
    grid: Grid,
    plans: [Option<(Plan<T>, Plan<T>)>; 3],
    deriv_k: Vec<[T; 3]>,
    k_sq: Vec<T>,
    linf: Vec<usize>,
    neg: Vec<usize>,
}

impl<T: Scalar> Fourier<T> {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let mut plans: [Option<(Plan<T>, Plan<T>)>; 3] = [None, None, None];
        let mut wave: [Vec<(i64, T, T)>; 3] = [vec![], vec![], vec![]];
        for a in 0..3 {
            let n = grid.n(a);
            if a < grid.dim() {
                plans[a] = Some((planner.plan_fft_forward(n), planner.plan_fft_inverse(n)));
                let scale = std::f64::consts::TAU / grid.length(a);
                wave[a] = (0..n)
                    .map(|i| {
                        let m = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
                        let full = T::of(scale * m as f64);
                        let deriv = if i == n / 2 { T::zero() } else { full };
                        (m.abs(), full, deriv)
                    })
                    .collect();
            } else {
                wave[a] = vec![(0, T::zero(), T::zero())];
            }
        }
        let np = grid.num_points();
        let mut deriv_k = Vec::with_capacity(np);
        let mut k_sq = Vec::with_capacity(np);
        let mut linf = Vec::with_capacity(np);
        let mut neg = Vec::with_capacity(np);
        let shape = grid.shape();
        for idx in 0..np {
            let m = grid.multi_index(idx);
            neg.push(grid.index((shape[0] - m[0]) % shape[0], (shape[1] - m[1]) % shape[1], (shape[2] - m[2]) % shape[2]));
            let w = [wave[0][m[0]], wave[1][m[1]], wave[2][m[2]]];
            deriv_k.push([w[0].2, w[1].2, w[2].2]);
            k_sq.push(w[0].1 * w[0].1 + w[1].1 * w[1].1 + w[2].1 * w[2].1);
            linf.push(w[0].0.max(w[1].0).max(w[2].0) as usize);
        }
        Fourier { grid: grid.clone(), plans, deriv_k, k_sq, linf, neg }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Largest integer mode index representable on every active axis.
    pub fn nyquist(&self) -> usize {
        (0..self.grid.dim()).map(|a| self.grid.n(a) / 2).min().unwrap_or(0)
    }

    /// Cutoff of the 2/3 rule: modes with `|m|_∞ > n/3` are removed after products.
    pub fn dealias_cutoff(&self) -> usize {
        (0..self.grid.dim()).map(|a| self.grid.n(a) / 3).min().unwrap_or(0)
    }

    #[inline]
    pub fn deriv_wavevector(&self, idx: usize) -> [T; 3] {
        self.deriv_k[idx]
    }

    #[inline]
    pub fn k_squared(&self, idx: usize) -> T {
        self.k_sq[idx]
    }

    /// `max_a |m_a|` of the integer mode at `idx`.
    #[inline]
    pub fn mode_linf(&self, idx: usize) -> usize {
        self.linf[idx]
    }

    fn transform(&self, data: &mut [Complex<T>], inverse: bool) {
        let shape = self.grid.shape();
        for a in 0..self.grid.dim() {
            let (fwd, inv) = self.plans[a].as_ref().expect("active axis has a plan");
            let plan = if inverse { inv } else { fwd };
            let n = shape[a];
            let stride: usize = shape[a + 1..].iter().product();
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let outer: usize = shape[..a].iter().product();
            let mut line = vec![Complex::new(T::zero(), T::zero()); n];
            let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    for m in 0..n {
                        line[m] = data[base + m * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for m in 0..n {
                        data[base + m * stride] = line[m];
                    }
                }
            }
        }
        if inverse {
            let s = T::one() / T::of_usize(self.grid.num_points());
            for v in data.iter_mut() {
                *v = *v * s;
            }
        }
    }

    pub fn forward_scalar(&self, x: &[T]) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.transform(&mut data, false);
        data
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_real(&self, mut coeffs: Vec<Complex<T>>) -> Vec<T> {
        self.transform(&mut coeffs, true);
        coeffs.into_iter().map(|c| c.re).collect()
    }

    /// Forward transforms of several real arrays, two per complex FFT;
    /// `sink(n, idx, ĉ)` receives coefficient `idx` of array `n`.
    pub fn forward_each(&self, xs: &[&[T]], mut sink: impl FnMut(usize, usize, Complex<T>)) {
        let half = T::of(0.5);
        let np = self.grid.num_points();
        let mut z = vec![Complex::new(T::zero(), T::zero()); np];
        for (p, pair) in xs.chunks(2).enumerate() {
            let n = 2 * p;
            if pair.len() == 1 {
                for (zi, &a) in z.iter_mut().zip(pair[0]) {
                    *zi = Complex::new(a, T::zero());
                }
                self.transform(&mut z, false);
                for (idx, &c) in z.iter().enumerate() {
                    sink(n, idx, c);
                }
                continue;
            }
            for ((zi, &a), &b) in z.iter_mut().zip(pair[0]).zip(pair[1]) {
                *zi = Complex::new(a, b);
            }
            self.transform(&mut z, false);
            for idx in 0..np {
                let zk = z[idx];
                let zm = z[self.neg[idx]].conj();
                sink(n, idx, (zk + zm) * half);
                let d = (zk - zm) * half;
                sink(n + 1, idx, Complex::new(d.im, -d.re));
            }
        }
    }

    /// Inverse transforms of `outs.len()` Hermitian coefficient arrays given
    /// by `coeff(n, idx)`, two per complex FFT, written into `outs`.
    pub fn inverse_fill(&self, outs: &mut [&mut Vec<T>], coeff: impl Fn(usize, usize) -> Complex<T>) {
        let np = self.grid.num_points();
        let mut z = vec![Complex::new(T::zero(), T::zero()); np];
        let count = outs.len();
        let mut n = 0;
        while n < count {
            if n + 1 < count {
                for (idx, zi) in z.iter_mut().enumerate() {
                    let (x, y) = (coeff(n, idx), coeff(n + 1, idx));
                    *zi = Complex::new(x.re - y.im, x.im + y.re);
                }
                self.transform(&mut z, true);
                let (lo, hi) = outs.split_at_mut(n + 1);
                let (oa, ob) = (&mut lo[n], &mut hi[0]);
                oa.clear();
                ob.clear();
                oa.extend(z.iter().map(|c| c.re));
                ob.extend(z.iter().map(|c| c.im));
                n += 2;
            } else {
                for (idx, zi) in z.iter_mut().enumerate() {
                    *zi = coeff(n, idx);
                }
                self.transform(&mut z, true);
                outs[n].clear();
                outs[n].extend(z.iter().map(|c| c.re));
                n += 1;
            }
        }
    }

    pub fn forward(&self, v: &VectorField<T>) -> Spectrum<T> {
        let mut out = Spectrum::zeros(&self.grid);
        self.forward_each(&[&v.comps[0], &v.comps[1], &v.comps[2]], |n, idx, c| out.comps[n][idx] = c);
        out
    }

    /// Inverse of a Hermitian spectrum (the spectrum of a real field).
    pub fn inverse(&self, s: &Spectrum<T>) -> VectorField<T> {
        let mut v = VectorField::zeros(&self.grid);
        let [a, b, c] = &mut v.comps;
        self.inverse_fill(&mut [a, b, c], |n, idx| s.comps[n][idx]);
        v
    }

    /// `(∇v)_ij = ∂_j v_i` from coefficients.
    pub fn gradient_of(&self, s: &Spectrum<T>) -> TensorField<T> {
        let dim = self.grid.dim();
        let mut g = TensorField::zeros(&self.grid);
        let mut outs: Vec<&mut Vec<T>> = g.comps.iter_mut().flat_map(|row| row.iter_mut().take(dim)).collect();
        self.inverse_fill(&mut outs, |n, idx| {
            let c = s.comps[n / dim][idx];
            let k = self.deriv_k[idx][n % dim];
            Complex::new(-k * c.im, k * c.re)
        });
        g
    }

    pub fn gradient(&self, v: &VectorField<T>) -> Result<TensorField<T>, FieldError> {
        v.check_finite("v")?;
        super::same_grid(&v.grid, &self.grid)?;
        Ok(self.gradient_of(&self.forward(v)))
    }

    pub fn divergence_of(&self, s: &Spectrum<T>) -> ScalarField<T> {
        let mut acc = vec![Complex::new(T::zero(), T::zero()); self.grid.num_points()];
        for j in 0..self.grid.dim() {
            for (idx, a) in acc.iter_mut().enumerate() {
                let k = self.deriv_k[idx][j];
                let c = s.comps[j][idx];
                *a = *a + Complex::new(-k * c.im, k * c.re);
            }
        }
        ScalarField { grid: self.grid.clone(), data: self.inverse_real(acc) }
    }

    pub fn divergence(&self, v: &VectorField<T>) -> Result<ScalarField<T>, FieldError> {
        v.check_finite("v")?;
        super::same_grid(&v.grid, &self.grid)?;
        Ok(self.divergence_of(&self.forward(v)))
    }

    /// Coefficients of `Δv` (symbol `-|k|²`).
    pub fn laplacian_spectrum(&self, s: &Spectrum<T>) -> Spectrum<T> {
        let mut out = s.clone();
        for c in 0..3 {
            for (idx, v) in out.comps[c].iter_mut().enumerate() {
                *v = *v * (-self.k_sq[idx]);
            }
        }
        out
    }

    pub fn laplacian(&self, v: &VectorField<T>) -> Result<VectorField<T>, FieldError> {
        v.check_finite("v")?;
        super::same_grid(&v.grid, &self.grid)?;
        Ok(self.inverse(&self.laplacian_spectrum(&self.forward(v))))
    }

    /// Coefficients of `(div σ)_i = Σ_j ∂_j σ_ij`.
    pub fn tensor_divergence(&self, sigma: &TensorField<T>) -> Spectrum<T> {
        let dim = self.grid.dim();
        let inputs: Vec<&[T]> = sigma.comps.iter().flat_map(|row| row.iter().take(dim).map(|c| c.as_slice())).collect();
        let mut out = Spectrum::zeros(&self.grid);
        self.forward_each(&inputs, |n, idx, c| {
            let k = self.deriv_k[idx][n % dim];
            let o = &mut out.comps[n / dim][idx];
            *o = *o + Complex::new(-k * c.im, k * c.re);
        });
        out
    }

    /// Zeroes every mode with `|m|_∞ > cutoff` (sharp Fourier cutoff).
    pub fn truncate(&self, s: &mut Spectrum<T>, cutoff: usize) {
        let z = Complex::new(T::zero(), T::zero());
        for c in 0..3 {
            for (idx, v) in s.comps[c].iter_mut().enumerate() {
                if self.linf[idx] > cutoff {
                    *v = z;
                }
            }
        }
    }

    pub fn truncate_scalar(&self, s: &mut [Complex<T>], cutoff: usize) {
        let z = Complex::new(T::zero(), T::zero());
        for (idx, v) in s.iter_mut().enumerate() {
            if self.linf[idx] > cutoff {
                *v = z;
            }
        }
    }

    /// Removes the wavevector-parallel part of every mode, `v̂ ← v̂ − k (k·v̂)/|k|²`.
    pub fn leray(&self, s: &mut Spectrum<T>) {
        for idx in 0..self.grid.num_points() {
            let k = self.deriv_k[idx];
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == T::zero() {
                continue;
            }
            let mut kv = Complex::new(T::zero(), T::zero());
            for c in 0..3 {
                kv = kv + s.comps[c][idx] * k[c];
            }
            let f = kv / kk;
            for c in 0..3 {
                s.comps[c][idx] = s.comps[c][idx] - f * k[c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_x1(g: &Grid) -> VectorField<f64> {
        VectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0])
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let g = Grid::torus(2, 16).unwrap();
        let f = Fourier::new(&g);
        let v = VectorField::constant(&g, [1.5, -2.0, 0.25]);
        assert!(f.gradient(&v).unwrap().max_abs() < 1e-14);
        assert!(f.laplacian(&v).unwrap().max_abs() < 1e-14);
        assert!(f.divergence(&v).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn single_mode_calculus() {
        let g = Grid::torus(2, 16).unwrap();
        let f = Fourier::new(&g);
        let v = sin_x1(&g);
        let grad = f.gradient(&v).unwrap();
        let div = f.divergence(&v).unwrap();
        let lap = f.laplacian(&v).unwrap();
        for idx in 0..g.num_points() {
            let x = g.coords(idx);
            let m = grad.at(idx);
            assert!((m[0][0] - x[0].cos()).abs() < 1e-13);
            for i in 0..3 {
                for j in 0..3 {
                    if (i, j) != (0, 0) {
                        assert!(m[i][j].abs() < 1e-13);
                    }
                }
            }
            assert!((div.data[idx] - x[0].cos()).abs() < 1e-13);
            assert!((lap.comps[0][idx] + x[0].sin()).abs() < 1e-13);
        }
        let w = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        assert!(f.divergence(&w).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn spectral_derivative_symbol() {
        // A single coefficient at mode (2, 1) maps to i k_j v̂_i.
        let g = Grid::torus(2, 8).unwrap();
        let f = Fourier::<f64>::new(&g);
        let idx = g.index(2, 1, 0);
        let k = f.deriv_wavevector(idx);
        assert_eq!(k, [2.0, 1.0, 0.0]);
        assert_eq!(f.k_squared(idx), 5.0);
        let neg = g.index(6, 0, 0);
        assert_eq!(f.deriv_wavevector(neg)[0], -2.0);
        let nyq = g.index(4, 0, 0);
        assert_eq!(f.deriv_wavevector(nyq)[0], 0.0);
        assert_eq!(f.k_squared(nyq), 16.0);
    }

    #[test]
    fn three_dimensional_round_trip() {
        let g = Grid::new(3, &[8, 4, 16], &[1.0, 2.0, 3.0]).unwrap();
        let f = Fourier::new(&g);
        let v = VectorField::<f64>::from_fn(&g, |x| {
            [(x[0] * 3.0).sin(), x[1].cos() * x[2].sin(), 1.0 + x[0] * x[1]]
        });
        let back = f.inverse(&f.forward(&v));
        for c in 0..3 {
            for (a, b) in v.comps[c].iter().zip(&back.comps[c]) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn derivative_along_third_axis() {
        let g = Grid::torus(3, 8).unwrap();
        let f = Fourier::new(&g);
        let v = VectorField::<f64>::from_fn(&g, |x| [0.0, (2.0 * x[2]).sin(), 0.0]);
        let grad = f.gradient(&v).unwrap();
        for idx in 0..g.num_points() {
            let x = g.coords(idx);
            assert!((grad.comps[1][2][idx] - 2.0 * (2.0 * x[2]).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn leray_removes_parallel_part() {
        let g = Grid::torus(2, 8).unwrap();
        let f = Fourier::<f64>::new(&g);
        let mut s = Spectrum::zeros(&g);
        let idx = g.index(1, 0, 0);
        s.comps[0][idx] = Complex::new(1.0, 0.0);
        s.comps[1][idx] = Complex::new(1.0, 0.0);
        f.leray(&mut s);
        assert!(s.comps[0][idx].norm() < 1e-15);
        assert!((s.comps[1][idx] - Complex::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn tensor_divergence_of_diagonal_field() {
        let g = Grid::torus(2, 16).unwrap();
        let f = Fourier::new(&g);
        let mut t = TensorField::zeros(&g);
        for idx in 0..g.num_points() {
            let x = g.coords(idx);
            t.comps[0][0][idx] = x[0].sin();
            t.comps[2][1][idx] = (2.0 * x[1]).cos();
        }
        let div = f.inverse(&f.tensor_divergence(&t));
        for idx in 0..g.num_points() {
            let x = g.coords(idx);
            assert!((div.comps[0][idx] - x[0].cos()).abs() < 1e-13);
            assert!((div.comps[2][idx] + 2.0 * (2.0 * x[1]).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let g = Grid::torus(2, 8).unwrap();
        let f = Fourier::new(&g);
        let mut v = VectorField::<f64>::zeros(&g);
        v.comps[1][0] = f64::INFINITY;
        assert_eq!(
            f.gradient(&v).unwrap_err(),
            FieldError::NonFinite { component: "v[1]".into() }
        );
    }
}
