use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Regularization;
use crate::error::SolverError;
use crate::fields::{lp_norm, same_grid, Fourier, TensorField, VectorField};
use crate::galerkin::{r_laplacian_term, SolverState, SpectralSolver};
use crate::potential::Potential;
use crate::presets::random_band_limited;
use crate::scalar::Scalar;
use crate::stress::{elastic_stress_from_g, ModelParams};

/// Everything the momentum balance needs besides the two snapshots.
pub struct WeakForm<'a, T: Scalar> {
    pub fourier: &'a Fourier<T>,
    pub params: ModelParams,
    pub potential: &'a Potential<T>,
    pub forcing: Option<&'a VectorField<T>>,
    pub regularization: Option<Regularization>,
    /// Cutoff of the transporting velocity `[u]_M`.
    pub mollifier: usize,
    /// Test functions use modes with `|m|_∞ ≤ test_cutoff`.
    pub test_cutoff: usize,
}

impl<'a, T: Scalar> WeakForm<'a, T> {
    /// Uses the solver's constants, with test functions up to `N/4`.
    pub fn from_solver(s: &'a SpectralSolver<T>) -> Self {
        WeakForm {
            fourier: s.fourier(),
            params: *s.params(),
            potential: s.potential(),
            forcing: s.forcing(),
            regularization: s.regularization(),
            mollifier: s.mollifier_cutoff(),
            test_cutoff: (s.scheme().n / 4).max(1),
        }
    }

    /// Residual of the momentum balance between two snapshots, as the pair
    /// `(a, F)` with `R(φ) = ∫ a·φ + ∫ F:∇φ`:
    ///
    /// `a = (u − u_prev)/dt − f`,
    /// `F = −u ⊗ [u]_M + μ∇u + (T − S) + (1/M)|∇u|^{r−2}∇u`,
    ///
    /// all evaluated at the later snapshot. The pressure drops out for
    /// divergence-free `φ`.
    pub fn residual_density(&self, prev: &SolverState<T>, next: &SolverState<T>) -> Result<(VectorField<T>, TensorField<T>), SolverError> {
        let f = self.fourier;
        for s in [prev, next] {
            same_grid(s.grid(), f.grid())?;
            s.u.check_finite("u")?;
            s.d.check_finite("d")?;
        }
        let dt = next.t - prev.t;
        if !(dt > 0.0) {
            return Err(SolverError::Invalid(vec![format!("snapshots must be increasing in time, got dt = {dt}")]));
        }
        let mut a = next.u.axpy(-T::one(), &prev.u).scaled(T::of(1.0 / dt));
        if let Some(force) = self.forcing {
            a = a.axpy(-T::one(), force);
        }

        let uh = f.forward(&next.u);
        let grad_u = f.gradient_of(&uh);
        let mut um = uh.clone();
        f.truncate(&mut um, self.mollifier);
        let u_m = f.inverse(&um);
        let dh = f.forward(&next.d);
        let grad_d = f.gradient_of(&dh);
        let lap_d = f.inverse(&f.laplacian_spectrum(&dh));
        let g = lap_d.axpy(-T::one(), &self.potential.grad_field(&next.d));
        let mut flux = elastic_stress_from_g(&next.d, &grad_d, &g, &self.params);
        let reg = match self.regularization {
            Some(Regularization { m, r }) => Some(r_laplacian_term(f, &next.u, r, m)?),
            None => None,
        };
        let mu = T::of(self.params.mu);
        for idx in 0..f.grid().num_points() {
            let (u, w, gu) = (next.u.at(idx), u_m.at(idx), grad_u.at(idx));
            for i in 0..3 {
                for j in 0..3 {
                    let mut v = flux.comps[i][j][idx] - u[i] * w[j] + mu * gu[i][j];
                    if let Some(r) = &reg {
                        v = v + r.comps[i][j][idx];
                    }
                    flux.comps[i][j][idx] = v;
                }
            }
        }
        Ok((a, flux))
    }

    /// `R(φ)` for one test function.
    pub fn functional(&self, density: &(VectorField<T>, TensorField<T>), phi: &VectorField<T>) -> Result<f64, SolverError> {
        let grad_phi = self.fourier.gradient(phi)?;
        Ok((density.0.inner(phi) + density.1.contract_integral(&grad_phi)).to_f64_lossy())
    }
}

/// `(‖φ‖³_{L³} + ‖∇φ‖³_{L³})^{1/3}`
pub fn w13_norm<T: Scalar>(fourier: &Fourier<T>, phi: &VectorField<T>) -> Result<f64, SolverError> {
    let a = lp_norm(phi, 3.0)?.to_f64_lossy();
    let b = lp_norm(&fourier.gradient(phi)?, 3.0)?.to_f64_lossy();
    Ok((a.powi(3) + b.powi(3)).cbrt())
}

/// `count` seeded, band-limited (`|m|_∞ ≤ cutoff`), divergence-free fields of unit `W^{1,3}` norm.
pub fn test_functions<T: Scalar>(fourier: &Fourier<T>, cutoff: usize, count: usize, seed: u64) -> Result<Vec<VectorField<T>>, SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut hat = fourier.forward(&random_band_limited::<T>(fourier.grid(), cutoff, &mut rng));
        fourier.leray(&mut hat);
        let phi = fourier.inverse(&hat);
        let n = w13_norm(fourier, &phi)?;
        if n > 0.0 {
            out.push(phi.scaled(T::of(1.0 / n)));
        }
    }
    Ok(out)
}

/// Largest `|R(φ)|` over `test_count` random test functions.
pub fn weak_residual<T: Scalar>(
    form: &WeakForm<'_, T>,
    prev: &SolverState<T>,
    next: &SolverState<T>,
    test_count: usize,
    seed: u64,
) -> Result<f64, SolverError> {
    let density = form.residual_density(prev, next)?;
    let mut worst = 0.0f64;
    for phi in test_functions(form.fourier, form.test_cutoff, test_count, seed)? {
        worst = worst.max(form.functional(&density, &phi)?.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::energy_record;
    use crate::fields::Grid;
    use crate::galerkin::SchemeParams;
    use crate::potential::PotentialKind;
    use crate::presets::Preset;

    fn solver(grid: &Grid, dt: f64) -> SpectralSolver<f64> {
        let scheme = SchemeParams { n: 8, m: 4, dt, t_end: 0.05, ..SchemeParams::default() };
        let params = ModelParams { alpha: 0.3, ..ModelParams::default() };
        SpectralSolver::new(grid, params, scheme, Potential::new(PotentialKind::default()).unwrap(), None).unwrap()
    }

    #[test]
    fn test_functions_are_solenoidal_unit_and_band_limited() {
        let g = Grid::torus(2, 32).unwrap();
        let f = Fourier::<f64>::new(&g);
        let a = test_functions(&f, 4, 5, 7).unwrap();
        let b = test_functions(&f, 4, 5, 7).unwrap();
        assert_eq!(a, b);
        for phi in &a {
            assert!(f.divergence(phi).unwrap().max_abs() < 1e-12);
            assert!((w13_norm(&f, phi).unwrap() - 1.0).abs() < 1e-12);
            let hat = f.forward(phi);
            for c in &hat.comps {
                for (idx, v) in c.iter().enumerate() {
                    if f.mode_linf(idx) > 4 {
                        assert!(v.norm() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn rest_state_has_no_residual() {
        let g = Grid::torus(2, 16).unwrap();
        let s = solver(&g, 1e-3);
        let (u, d) = Preset::Rest.build::<f64>(&g, 1.0, 0);
        let a = SolverState::new(u.clone(), d.clone()).unwrap();
        let mut b = SolverState::new(u, d).unwrap();
        b.t = 1e-3;
        let r = weak_residual(&WeakForm::from_solver(&s), &a, &b, 10, 1).unwrap();
        assert!(r <= 1e-12, "{r}");
    }

    #[test]
    fn velocity_as_test_function_gives_kinetic_balance() {
        let g = Grid::torus(2, 32).unwrap();
        let mut s = solver(&g, 1e-3);
        let (u0, d0) = Preset::Smooth.build::<f64>(&g, 1.0, 3);
        let mut st = s.initial_state(&u0, &d0).unwrap();
        let prev = st.clone();
        s.advance(&mut st).unwrap();
        let form = WeakForm::from_solver(&s);
        let density = form.residual_density(&prev, &st).unwrap();
        let via_weak = form.functional(&density, &st.u).unwrap();

        // The same quantity assembled from energy records and the stress power.
        let rec = |x: &SolverState<f64>| {
            energy_record(s.fourier(), x.t, &x.u, &x.d, s.params(), s.potential(), None, 0.0, s.regularization()).unwrap()
        };
        let (r0, r1) = (rec(&prev), rec(&st));
        let dt = st.t - prev.t;
        let jump = st.u.axpy(-1.0, &prev.u);
        let f = s.fourier();
        let dh = f.forward(&st.d);
        let grad_d = f.gradient_of(&dh);
        let g1 = f.inverse(&f.laplacian_spectrum(&dh)).axpy(-1.0, &s.potential().grad_field(&st.d));
        let stress = elastic_stress_from_g(&st.d, &grad_d, &g1, s.params());
        let power = stress.contract_integral(&f.gradient(&st.u).unwrap());
        let mut um = f.forward(&st.u);
        f.truncate(&mut um, s.mollifier_cutoff());
        let um = f.inverse(&um);
        let mut conv = VectorField::zeros(&g);
        let gu = f.gradient(&st.u).unwrap();
        for i in 0..g.num_points() {
            conv.set(i, crate::scalar::mat_vec(&gu.at(i), &um.at(i)));
        }
        let expected = (r1.kinetic - r0.kinetic) / (2.0 * dt)
            + jump.inner(&jump) / (2.0 * dt)
            + r1.visc_diss
            + r1.reg_diss
            + power
            + conv.inner(&st.u);
        assert!((via_weak - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{via_weak} vs {expected}");
    }
}
