//! Periodic pseudospectral Galerkin solver.
//!
//! The velocity lives in `X_N`, the divergence-free trigonometric fields with
//! `|m|_∞ ≤ N`. Convection is `([u]_M · ∇) u` with `[u]_M` the projection onto
//! `|m|_∞ ≤ M`, and the momentum balance carries the extra dissipation
//! `−div((1/M)|∇u|^{r−2}∇u)`. Both Laplacians are backward Euler; everything
//! else is explicit and dealiased by the 2/3 rule, so every linear solve is
//! diagonal in Fourier space.
//!
//! One [`SpectralSolver::advance`] updates the director with `u^n` and then the
//! velocity with `d^{n+1}`. With Picard coupling enabled the two updates are
//! alternated until the iterates settle.

use num_complex::Complex;

use crate::diagnostics::{energy_record, record_from_parts, EnergyRecord, Regularization, StateParts};
use crate::error::SolverError;
use crate::fields::{hminus1_norm, FieldError, Fourier, Grid, ScalarField, Spectrum, TensorField, VectorField};
use crate::potential::Potential;
use crate::scalar::{mat_vec, Scalar};
use crate::stress::{elastic_stress_from_g, stretching_at, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Picard {
    Off,
    On { max_iters: usize, tol: f64 },
}

/// Discretization constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    /// Velocity mode cutoff `N`.
    pub n: usize,
    /// Mollification and regularization index `M ≤ N`.
    pub m: usize,
    pub r: f64,
    pub dt: f64,
    pub t_end: f64,
    pub picard: Picard,
    pub stabilization: f64,
    /// Include the `(1/M)` r-Laplacian term.
    pub regularize: bool,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            n: 32,
            m: 16,
            r: 3.2,
            dt: 1e-3,
            t_end: 0.1,
            picard: Picard::Off,
            stabilization: 0.0,
            regularize: true,
        }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.n == 0 {
            errs.push("scheme.N must be >= 1".to_string());
        }
        if self.m == 0 {
            errs.push("scheme.M must be >= 1".to_string());
        }
        if self.m > self.n {
            errs.push(format!("scheme.M must be <= scheme.N (got M = {}, N = {})", self.m, self.n));
        }
        if !(self.r > 3.0 && self.r < 10.0 / 3.0) {
            errs.push(format!("scheme.r must lie in (3, 10/3), got {}", self.r));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            errs.push(format!("scheme.dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            errs.push(format!("scheme.t_end must be > 0, got {}", self.t_end));
        }
        if let Picard::On { max_iters, tol } = self.picard {
            if max_iters == 0 {
                errs.push("scheme.picard_max_iters must be >= 1".to_string());
            }
            if !(tol.is_finite() && tol > 0.0) {
                errs.push(format!("scheme.picard_tol must be > 0, got {tol}"));
            }
        }
        if !(self.stabilization.is_finite() && self.stabilization >= 0.0) {
            errs.push(format!("scheme.stabilization must be >= 0, got {}", self.stabilization));
        }
        errs
    }

    /// Checks that depend on the grid as well.
    pub fn validate_for_grid(&self, grid: &Grid) -> Vec<String> {
        let nyquist = (0..grid.dim()).map(|a| grid.n(a) / 2).min().unwrap_or(0);
        let mut errs = Vec::new();
        if self.n > nyquist {
            errs.push(format!("scheme.N = {} exceeds the grid Nyquist index {nyquist}", self.n));
        }
        errs
    }

    pub fn num_steps(&self) -> u64 {
        (self.t_end / self.dt).round().max(1.0) as u64
    }
}

/// Time level of the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    pub t: f64,
    pub u: VectorField<T>,
    pub d: VectorField<T>,
    /// Mean-zero pressure recovered from the projection.
    pub pressure: ScalarField<T>,
    pub step_index: u64,
}

impl<T: Scalar> SolverState<T> {
    pub fn new(u: VectorField<T>, d: VectorField<T>) -> Result<Self, FieldError> {
        crate::fields::same_grid(&u.grid, &d.grid)?;
        let pressure = ScalarField::zeros(&u.grid);
        Ok(SolverState { t: 0.0, u, d, pressure, step_index: 0 })
    }

    pub fn grid(&self) -> &Grid {
        &self.u.grid
    }
}

/// Physical `v` restricted to `|m|_∞ ≤ cutoff`.
pub fn truncate_modes<T: Scalar>(fourier: &Fourier<T>, v: &VectorField<T>, cutoff: usize) -> Result<VectorField<T>, FieldError> {
    if cutoff > fourier.nyquist() {
        return Err(FieldError::CutoffOutOfRange { cutoff, nyquist: fourier.nyquist() });
    }
    v.check_finite("v")?;
    let mut s = fourier.forward(v);
    fourier.truncate(&mut s, cutoff);
    Ok(fourier.inverse(&s))
}

pub fn leray_project<T: Scalar>(fourier: &Fourier<T>, v: &VectorField<T>) -> Result<VectorField<T>, FieldError> {
    v.check_finite("v")?;
    let mut s = fourier.forward(v);
    fourier.leray(&mut s);
    Ok(fourier.inverse(&s))
}

/// Pointwise `(1/M)|A|^{r−2} A` (Frobenius norm).
#[inline]
fn r_laplacian_at<T: Scalar>(a: &mut [[T; 3]; 3], r: T, inv_m: T) {
    let mut n2 = T::zero();
    for row in a.iter() {
        for v in row {
            n2 = n2 + *v * *v;
        }
    }
    let f = if n2 == T::zero() { T::zero() } else { inv_m * n2.powf((r - T::of(2.0)) / T::of(2.0)) };
    for row in a.iter_mut() {
        for v in row.iter_mut() {
            *v = *v * f;
        }
    }
}

/// `(1/M)|∇u|^{r−2}∇u`, dealiased.
pub fn r_laplacian_term<T: Scalar>(fourier: &Fourier<T>, u: &VectorField<T>, r: f64, m: usize) -> Result<TensorField<T>, FieldError> {
    let mut g = fourier.gradient(u)?;
    let (rt, inv_m) = (T::of(r), T::one() / T::of_usize(m));
    for idx in 0..g.grid.num_points() {
        let mut a = g.at(idx);
        r_laplacian_at(&mut a, rt, inv_m);
        g.set(idx, a);
    }
    let cut = fourier.dealias_cutoff();
    for row in g.comps.iter_mut() {
        for c in row.iter_mut() {
            let mut hat = fourier.forward_scalar(c);
            fourier.truncate_scalar(&mut hat, cut);
            *c = fourier.inverse_real(hat);
        }
    }
    Ok(g)
}

/// Spectral solver for the coupled velocity/director system on a torus.
pub struct SpectralSolver<T: Scalar> {
    fourier: Fourier<T>,
    params: ModelParams,
    scheme: SchemeParams,
    potential: Potential<T>,
    forcing: Option<(VectorField<T>, Spectrum<T>)>,
    fnorm: f64,
    n_eff: usize,
    m_eff: usize,
    d_cut: usize,
    history: Vec<EnergyRecord>,
    cache: Option<Derived<T>>,
}

/// Fields derived from the state at the end of the last step.
struct Derived<T: Scalar> {
    step: u64,
    u: VectorField<T>,
    uh: Spectrum<T>,
    grad_u: TensorField<T>,
    d: VectorField<T>,
    dh: Spectrum<T>,
    grad_d: TensorField<T>,
}

/// `d`, `∇d` and `g = Δd − ∇W(d)` for an updated director.
struct DirectorParts<T: Scalar> {
    d: VectorField<T>,
    grad_d: TensorField<T>,
    g: VectorField<T>,
}

impl<T: Scalar> SpectralSolver<T> {
    /// `forcing` is time-independent and must have zero mean; it is restricted
    /// to `X_N`'s mode range.
    pub fn new(
        grid: &Grid,
        params: ModelParams,
        scheme: SchemeParams,
        potential: Potential<T>,
        forcing: Option<VectorField<T>>,
    ) -> Result<Self, SolverError> {
        let mut errs = params.validate();
        errs.extend(scheme.validate());
        errs.extend(scheme.validate_for_grid(grid));
        if !errs.is_empty() {
            return Err(SolverError::Invalid(errs));
        }
        let fourier = Fourier::new(grid);
        let d_cut = fourier.dealias_cutoff();
        let n_eff = scheme.n.min(d_cut);
        let m_eff = scheme.m.min(n_eff);
        let (forcing, fnorm) = match forcing {
            Some(f) => {
                f.check_finite("f")?;
                crate::fields::same_grid(&f.grid, grid)?;
                let mut hat = fourier.forward(&f);
                fourier.truncate(&mut hat, n_eff);
                let tol = T::of(1e-12 * grid.num_points() as f64) * (T::one() + f.max_abs());
                if hat.comps.iter().any(|c| c[0].norm() > tol) {
                    return Err(SolverError::Invalid(vec!["forcing must have zero mean".into()]));
                }
                for c in hat.comps.iter_mut() {
                    c[0] = Complex::new(T::zero(), T::zero());
                }
                let phys = fourier.inverse(&hat);
                let fnorm = hminus1_norm(&fourier, &phys)?.to_f64_lossy();
                (Some((phys, hat)), fnorm)
            }
            None => (None, 0.0),
        };
        Ok(SpectralSolver { fourier, params, scheme, potential, forcing, fnorm, n_eff, m_eff, d_cut, history: Vec::new(), cache: None })
    }

    pub fn fourier(&self) -> &Fourier<T> {
        &self.fourier
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn scheme(&self) -> &SchemeParams {
        &self.scheme
    }

    pub fn potential(&self) -> &Potential<T> {
        &self.potential
    }

    /// Velocity cutoff actually used, `min(N, n/3)`.
    pub fn velocity_cutoff(&self) -> usize {
        self.n_eff
    }

    /// Cutoff of `[u]_M` actually used, `min(M, velocity_cutoff)`.
    pub fn mollifier_cutoff(&self) -> usize {
        self.m_eff
    }

    pub fn forcing(&self) -> Option<&VectorField<T>> {
        self.forcing.as_ref().map(|(f, _)| f)
    }

    pub fn history(&self) -> &[EnergyRecord] {
        &self.history
    }

    pub fn regularization(&self) -> Option<Regularization> {
        self.scheme.regularize.then_some(Regularization { m: self.scheme.m, r: self.scheme.r })
    }

    /// Projects `u0` onto `X_N`, truncates `d0` to `|m|_∞ ≤ M`, and records the initial energy.
    pub fn initial_state(&mut self, u0: &VectorField<T>, d0: &VectorField<T>) -> Result<SolverState<T>, SolverError> {
        u0.check_finite("u0")?;
        d0.check_finite("d0")?;
        let grid = self.fourier.grid();
        crate::fields::same_grid(&u0.grid, grid)?;
        crate::fields::same_grid(&d0.grid, grid)?;
        let mut uh = self.fourier.forward(u0);
        self.fourier.leray(&mut uh);
        self.fourier.truncate(&mut uh, self.n_eff);
        let mut dh = self.fourier.forward(d0);
        self.fourier.truncate(&mut dh, self.m_eff.min(self.d_cut));
        let state = SolverState::new(self.fourier.inverse(&uh), self.fourier.inverse(&dh))?;
        self.history.clear();
        let rec = self.record(&state)?;
        self.history.push(rec);
        Ok(state)
    }

    /// Starts from `state` as given (e.g. a snapshot) without projecting it.
    pub fn resume(&mut self, state: &SolverState<T>) -> Result<(), SolverError> {
        self.history.clear();
        let rec = self.record(state)?;
        self.history.push(rec);
        Ok(())
    }

    pub fn record(&self, state: &SolverState<T>) -> Result<EnergyRecord, SolverError> {
        Ok(energy_record(
            &self.fourier,
            state.t,
            &state.u,
            &state.d,
            &self.params,
            &self.potential,
            self.forcing(),
            self.fnorm,
            self.regularization(),
        )?)
    }

    /// `d^{n+1}` from `d^n = state.d`, transported by `u_used`. `w1_at`
    /// supplies the point where `∇W₁` is evaluated (defaults to `d^n`).
    pub fn director_step(
        &self,
        state: &SolverState<T>,
        u_used: &VectorField<T>,
        w1_at: Option<&VectorField<T>>,
    ) -> Result<VectorField<T>, SolverError> {
        let f = &self.fourier;
        let dh = f.forward(&state.d);
        let grad_d = f.gradient_of(&dh);
        let grad_u = f.gradient_of(&f.forward(u_used));
        let next = self.director_update(&dh, &state.d, &grad_d, u_used, &grad_u, w1_at.unwrap_or(&state.d));
        Ok(f.inverse(&next))
    }

    /// `(u^{n+1}, p^{n+1})` from `u^n = state.u`, with the elastic stress built from `d_used`.
    pub fn velocity_step(
        &self,
        state: &SolverState<T>,
        d_used: &VectorField<T>,
    ) -> Result<(VectorField<T>, ScalarField<T>), SolverError> {
        let f = &self.fourier;
        let uh = f.forward(&state.u);
        let grad_u = f.gradient_of(&uh);
        let (next, p, _) = self.velocity_update(&uh, &state.u, &grad_u, &f.forward(d_used));
        Ok((f.inverse(&next), ScalarField { grid: state.u.grid.clone(), data: f.inverse_real(p) }))
    }

    fn director_update(
        &self,
        dh: &Spectrum<T>,
        d: &VectorField<T>,
        grad_d: &TensorField<T>,
        u: &VectorField<T>,
        grad_u: &TensorField<T>,
        w1_at: &VectorField<T>,
    ) -> Spectrum<T> {
        let f = &self.fourier;
        let gamma = T::of(self.params.gamma);
        let alpha = T::of(self.params.alpha);
        let stab = T::of(self.scheme.stabilization);
        let dt = T::of(self.scheme.dt);
        let mut rhs = VectorField::zeros(f.grid());
        for idx in 0..f.grid().num_points() {
            let dv = d.at(idx);
            let di = w1_at.at(idx);
            let adv = mat_vec(&grad_d.at(idx), &u.at(idx));
            let st = stretching_at(&dv, &grad_u.at(idx), alpha);
            let g1 = self.potential.grad_w1(&di);
            let g2 = self.potential.grad_w2(&dv);
            let mut v = [T::zero(); 3];
            for c in 0..3 {
                v[c] = -adv[c] - st[c] + gamma * (stab * di[c] - g1[c] - g2[c]);
            }
            rhs.set(idx, v);
        }
        let mut rh = f.forward(&rhs);
        f.truncate(&mut rh, self.d_cut);
        let mut out = dh.clone();
        for c in 0..3 {
            for (idx, o) in out.comps[c].iter_mut().enumerate() {
                let denom = T::one() + dt * gamma * (f.k_squared(idx) + stab);
                *o = (*o + rh.comps[c][idx] * dt) / denom;
            }
        }
        f.truncate(&mut out, self.d_cut);
        out
    }

    /// New velocity coefficients, (unnormalized) pressure coefficients, and
    /// the director quantities built from `dh`.
    fn velocity_update(
        &self,
        uh: &Spectrum<T>,
        u: &VectorField<T>,
        grad_u: &TensorField<T>,
        dh: &Spectrum<T>,
    ) -> (Spectrum<T>, Vec<Complex<T>>, DirectorParts<T>) {
        let f = &self.fourier;
        let np = f.grid().num_points();
        let d = f.inverse(dh);
        let grad_d = f.gradient_of(dh);
        let lap_d = f.inverse(&f.laplacian_spectrum(dh));
        let g = lap_d.axpy(-T::one(), &self.potential.grad_field(&d));
        let mut sigma = elastic_stress_from_g(&d, &grad_d, &g, &self.params);
        if self.scheme.regularize {
            let (r, inv_m) = (T::of(self.scheme.r), T::one() / T::of_usize(self.scheme.m));
            for idx in 0..np {
                let mut a = grad_u.at(idx);
                r_laplacian_at(&mut a, r, inv_m);
                for i in 0..3 {
                    for j in 0..3 {
                        sigma.comps[i][j][idx] = sigma.comps[i][j][idx] + a[i][j];
                    }
                }
            }
        }

        let u_m = if self.m_eff >= self.n_eff {
            None
        } else {
            let mut s = uh.clone();
            f.truncate(&mut s, self.m_eff);
            Some(f.inverse(&s))
        };
        let transporter = u_m.as_ref().unwrap_or(u);
        let mut conv = VectorField::zeros(f.grid());
        for idx in 0..np {
            conv.set(idx, mat_vec(&grad_u.at(idx), &transporter.at(idx)));
        }

        let mut rhs = f.tensor_divergence(&sigma);
        rhs.add_scaled(-T::one(), &f.forward(&conv));
        f.truncate(&mut rhs, self.d_cut);
        if let Some((_, fh)) = &self.forcing {
            rhs.add_scaled(T::one(), fh);
        }

        let mut p = vec![Complex::new(T::zero(), T::zero()); np];
        for (idx, pv) in p.iter_mut().enumerate() {
            let k = f.deriv_wavevector(idx);
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == T::zero() {
                continue;
            }
            let mut kg = Complex::new(T::zero(), T::zero());
            for c in 0..3 {
                kg = kg + rhs.comps[c][idx] * k[c];
            }
            // p̂ = −i k·Ĝ / |k|²
            *pv = Complex::new(kg.im, -kg.re) / kk;
        }

        let dt = T::of(self.scheme.dt);
        let mu = T::of(self.params.mu);
        let mut next = uh.clone();
        next.add_scaled(dt, &rhs);
        f.leray(&mut next);
        f.truncate(&mut next, self.n_eff);
        for c in 0..3 {
            for (idx, v) in next.comps[c].iter_mut().enumerate() {
                *v = *v / (T::one() + dt * mu * f.k_squared(idx));
            }
        }
        (next, p, DirectorParts { d, grad_d, g })
    }

    fn derive(&mut self, state: &SolverState<T>) -> Derived<T> {
        if let Some(c) = self.cache.take() {
            if c.step == state.step_index && c.u == state.u && c.d == state.d {
                return c;
            }
        }
        let f = &self.fourier;
        let uh = f.forward(&state.u);
        let dh = f.forward(&state.d);
        Derived {
            step: state.step_index,
            u: state.u.clone(),
            grad_u: f.gradient_of(&uh),
            uh,
            d: state.d.clone(),
            grad_d: f.gradient_of(&dh),
            dh,
        }
    }

    /// One time step; appends and returns the new energy record.
    pub fn advance(&mut self, state: &mut SolverState<T>) -> Result<EnergyRecord, SolverError> {
        let step = state.step_index + 1;
        let der = self.derive(state);
        let f = &self.fourier;

        let (u_new, d_new, p, parts) = match self.scheme.picard {
            Picard::Off => {
                let dn = self.director_update(&der.dh, &der.d, &der.grad_d, &der.u, &der.grad_u, &der.d);
                let (un, p, parts) = self.velocity_update(&der.uh, &der.u, &der.grad_u, &dn);
                (un, dn, p, parts)
            }
            Picard::On { max_iters, tol } => {
                let mut u_k = der.u.clone();
                let mut grad_k = der.grad_u.clone();
                let mut d_k = der.d.clone();
                let mut prev: Option<(Spectrum<T>, Spectrum<T>)> = None;
                let mut trace = Vec::new();
                let mut result = None;
                for _ in 0..max_iters {
                    let dn = self.director_update(&der.dh, &der.d, &der.grad_d, &u_k, &grad_k, &d_k);
                    let (un, p, parts) = self.velocity_update(&der.uh, &der.u, &der.grad_u, &dn);
                    let change = match &prev {
                        Some((pu, pd)) => relative_change(&[(&un, pu), (&dn, pd)]),
                        None => f64::INFINITY,
                    };
                    trace.push(change);
                    if change < tol {
                        result = Some((un, dn, p, parts));
                        break;
                    }
                    u_k = f.inverse(&un);
                    grad_k = f.gradient_of(&un);
                    d_k = parts.d;
                    prev = Some((un, dn));
                }
                match result {
                    Some(r) => r,
                    None => {
                        return Err(SolverError::PicardDiverged { step, iters: max_iters, trace });
                    }
                }
            }
        };

        let u = f.inverse(&u_new);
        u.check_finite("u").map_err(|_| SolverError::NonFinite { what: "velocity".into(), step })?;
        parts.d.check_finite("d").map_err(|_| SolverError::NonFinite { what: "director".into(), step })?;
        let grad_u = f.gradient_of(&u_new);
        let t = state.t + self.scheme.dt;
        let rec = record_from_parts(
            f,
            t,
            &StateParts { u: &u, u_hat: &u_new, grad_u: &grad_u, d: &parts.d, grad_d: &parts.grad_d, g: &parts.g },
            &self.params,
            &self.potential,
            self.forcing(),
            self.fnorm,
            self.regularization(),
        )?;
        if !rec.is_finite() {
            return Err(SolverError::NonFinite { what: "energy".into(), step });
        }
        if let Some(last) = self.history.last() {
            let (e0, e1) = (last.total(self.params.lambda), rec.total(self.params.lambda));
            if e0 > 0.0 && e1 > 10.0 * e0 {
                return Err(SolverError::CflAbort { step, t, ratio: e1 / e0 });
            }
        }
        let pressure = ScalarField { grid: u.grid.clone(), data: f.inverse_real(p) };
        *state = SolverState { t, u, d: parts.d, pressure, step_index: step };
        self.cache = Some(Derived {
            step,
            u: state.u.clone(),
            uh: u_new,
            grad_u,
            d: state.d.clone(),
            dh: d_new,
            grad_d: parts.grad_d,
        });
        self.history.push(rec);
        Ok(rec)
    }

    /// Advances until `t_end`, calling `observe` after every step.
    pub fn run(
        &mut self,
        state: &mut SolverState<T>,
        mut observe: impl FnMut(&SolverState<T>, &EnergyRecord),
    ) -> Result<(), SolverError> {
        let steps = self.scheme.num_steps();
        while state.step_index < steps {
            let rec = self.advance(state)?;
            observe(state, &rec);
        }
        Ok(())
    }
}

fn relative_change<T: Scalar>(pairs: &[(&Spectrum<T>, &Spectrum<T>)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in pairs {
        for c in 0..3 {
            for (x, y) in a.comps[c].iter().zip(&b.comps[c]) {
                num += (*x - *y).norm_sqr().to_f64_lossy();
                den += x.norm_sqr().to_f64_lossy();
            }
        }
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

#[cfg(test)]
mod tests;
