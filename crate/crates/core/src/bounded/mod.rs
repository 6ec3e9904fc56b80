//! Two-dimensional staggered-grid backend with walls.
//!
//! The velocity satisfies no-slip on the walls of a rectangle; the director
//! satisfies either a homogeneous Neumann condition or a time-dependent
//! Dirichlet condition `d|_Γ = h(t)`. A doubly periodic variant exists for
//! comparison with the spectral solver.
//!
//! The velocity is planar. Every spatial operator is derived from a discrete
//! energy so that the semi-discrete system satisfies the energy identity
//! exactly: the director Laplacian is the gradient of the edge-based Dirichlet
//! energy, the viscous operator is the gradient of `‖∇_h u‖²`, and the elastic
//! force on the faces is the exact transpose of the transport-plus-stretching
//! operator acting on the director. Time stepping mirrors the spectral solver
//! (backward Euler for both Laplacians, the rest explicit), with the pressure
//! obtained from a projection after the viscous solve.

mod cg;
mod dirichlet;
mod mesh;
#[cfg(test)]
mod tests;

pub use dirichlet::{dirichlet_energy_check, DirichletReport, DirichletStep};
pub use mesh::{MacGrid, MacVelocity, VelocityGradient};

use crate::diagnostics::EnergyRecord;
use crate::error::SolverError;
use crate::potential::Potential;
use crate::scalar::{Scalar, Vec3};
use crate::stress::ModelParams;
use cg::{conjugate_gradient, remove_mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    Neumann,
    Dirichlet,
}

impl BoundaryKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "periodic" => Some(BoundaryKind::Periodic),
            "neumann" => Some(BoundaryKind::Neumann),
            "dirichlet" => Some(BoundaryKind::Dirichlet),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryKind::Periodic => "periodic",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Dirichlet => "dirichlet",
        }
    }
}

/// Director trace on the boundary vertices (counterclockwise, see
/// [`MacGrid::boundary_nodes`]) sampled at increasing times. Values between
/// samples are interpolated linearly; outside the sampled range the nearest
/// sample is held.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    times: Vec<f64>,
    values: Vec<Vec<Vec3<f64>>>,
}

impl BoundaryData {
    pub fn new(times: Vec<f64>, values: Vec<Vec<Vec3<f64>>>) -> Result<Self, SolverError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(SolverError::Boundary(format!(
                "need one value row per sample time, got {} times and {} rows",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(SolverError::Boundary("sample times must be finite and strictly increasing".into()));
        }
        let nb = values[0].len();
        if values.iter().any(|r| r.len() != nb) {
            return Err(SolverError::Boundary("every sample must cover the same boundary nodes".into()));
        }
        if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(SolverError::Boundary("non-finite boundary value".into()));
        }
        Ok(BoundaryData { times, values })
    }

    /// Time-independent trace.
    pub fn constant(values: Vec<Vec3<f64>>) -> Self {
        BoundaryData { times: vec![0.0], values: vec![values] }
    }

    /// Samples `h(t, x)` on the boundary nodes of `grid` at each of `times`.
    pub fn from_fn(grid: &MacGrid, times: &[f64], h: impl Fn(f64, [f64; 2]) -> Vec3<f64>) -> Result<Self, SolverError> {
        let nodes = grid.boundary_nodes();
        let values = times
            .iter()
            .map(|&t| nodes.iter().map(|&(i, j)| h(t, grid.vertex_coords(i, j))).collect())
            .collect();
        Self::new(times.to_vec(), values)
    }

    pub fn num_nodes(&self) -> usize {
        self.values[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<Vec3<f64>>] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> Vec<Vec3<f64>> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0].clone();
        }
        if k == self.times.len() {
            return self.values[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        self.values[k - 1]
            .iter()
            .zip(&self.values[k])
            .map(|(a, b)| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])])
            .collect()
    }
}

/// Boundary condition for the director; the velocity always satisfies
/// no-slip on walls.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRegime {
    pub kind: BoundaryKind,
    pub h: Option<BoundaryData>,
}

impl BoundaryRegime {
    pub fn periodic() -> Self {
        BoundaryRegime { kind: BoundaryKind::Periodic, h: None }
    }

    pub fn neumann() -> Self {
        BoundaryRegime { kind: BoundaryKind::Neumann, h: None }
    }

    pub fn dirichlet(h: BoundaryData) -> Self {
        BoundaryRegime { kind: BoundaryKind::Dirichlet, h: Some(h) }
    }

    pub fn validate(&self, grid: &MacGrid) -> Result<(), SolverError> {
        match (self.kind, grid.is_periodic()) {
            (BoundaryKind::Periodic, false) => {
                return Err(SolverError::Boundary("periodic regime needs a periodic grid".into()))
            }
            (BoundaryKind::Neumann | BoundaryKind::Dirichlet, true) => {
                return Err(SolverError::Boundary(format!("{} regime needs a walled grid", self.kind.name())))
            }
            _ => {}
        }
        if self.kind == BoundaryKind::Dirichlet {
            let h = self.h.as_ref().ok_or_else(|| SolverError::Boundary("dirichlet regime requires h".into()))?;
            let nb = grid.boundary_nodes().len();
            if h.num_nodes() != nb {
                return Err(SolverError::Boundary(format!(
                    "h covers {} boundary nodes, grid has {nb}",
                    h.num_nodes()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacState<T> {
    pub t: f64,
    pub u: MacVelocity<T>,
    /// Director per vertex.
    pub d: Vec<Vec3<T>>,
    /// Mean-zero pressure per cell.
    pub pressure: Vec<T>,
    pub step_index: u64,
}

/// Boundary trace and discrete normal derivative of the director at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRecord {
    pub t: f64,
    pub h: Vec<Vec3<f64>>,
    /// Flux conjugate to the discrete energy: `−(w_b/ℓ_b) g_b`, which tends to `∂_n d`.
    pub normal_derivative: Vec<Vec3<f64>>,
}

/// Boundary records of a run plus the boundary quadrature weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryHistory {
    pub lengths: Vec<f64>,
    pub records: Vec<BoundaryRecord>,
}

pub struct MacSolver<T: Scalar> {
    grid: MacGrid,
    params: ModelParams,
    potential: Potential<T>,
    regime: BoundaryRegime,
    dt: f64,
    stabilization: f64,
    forcing: Option<MacVelocity<T>>,
    fnorm: f64,
    /// Free director vertices.
    free: Vec<bool>,
    history: Vec<EnergyRecord>,
    boundary: BoundaryHistory,
}

impl<T: Scalar> MacSolver<T> {
    pub fn new(
        grid: MacGrid,
        params: ModelParams,
        potential: Potential<T>,
        regime: BoundaryRegime,
        dt: f64,
        stabilization: f64,
        forcing: Option<MacVelocity<T>>,
    ) -> Result<Self, SolverError> {
        let mut errs = params.validate();
        if !(dt.is_finite() && dt > 0.0) {
            errs.push(format!("scheme.dt must be > 0, got {dt}"));
        }
        if !(stabilization.is_finite() && stabilization >= 0.0) {
            errs.push(format!("scheme.stabilization must be >= 0, got {stabilization}"));
        }
        if !errs.is_empty() {
            return Err(SolverError::Invalid(errs));
        }
        regime.validate(&grid)?;
        let forcing = match forcing {
            Some(mut f) => {
                if f.ux.len() != grid.num_ux() || f.uy.len() != grid.num_uy() || !f.is_finite() {
                    return Err(SolverError::Invalid(vec!["forcing does not match the MAC grid".into()]));
                }
                grid.enforce_no_slip(&mut f);
                Some(f)
            }
            None => None,
        };
        // ‖f‖_{H^{-1}} ≤ C_P ‖f‖_{L²}; reported as a surrogate.
        let fnorm = forcing.as_ref().map(|f| grid.poincare_constant() * grid.kinetic(f).to_f64_lossy().sqrt()).unwrap_or(0.0);
        let mut free = vec![true; grid.num_vertices()];
        if regime.kind == BoundaryKind::Dirichlet {
            for (i, j) in grid.boundary_nodes() {
                free[grid.vertex(i, j)] = false;
            }
        }
        let lengths = grid.boundary_nodes().iter().map(|&(i, j)| grid.boundary_length(i, j)).collect();
        Ok(MacSolver {
            grid,
            params,
            potential,
            regime,
            dt,
            stabilization,
            forcing,
            fnorm,
            free,
            history: Vec::new(),
            boundary: BoundaryHistory { lengths, records: Vec::new() },
        })
    }

    pub fn grid(&self) -> &MacGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn regime(&self) -> &BoundaryRegime {
        &self.regime
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn history(&self) -> &[EnergyRecord] {
        &self.history
    }

    pub fn boundary_history(&self) -> &BoundaryHistory {
        &self.boundary
    }

    /// Samples `(u0, d0)`, projects `u0` onto discretely divergence-free
    /// fields, checks `h(t0) = d0|_Γ` for Dirichlet data, and records the initial energy.
    pub fn initial_state(
        &mut self,
        t0: f64,
        u0: impl Fn([f64; 2]) -> [f64; 2],
        d0: impl Fn([f64; 2]) -> Vec3<f64>,
    ) -> Result<MacState<T>, SolverError> {
        let g = &self.grid;
        let u = MacVelocity::from_fn(g, u0);
        let mut d = vec![[T::zero(); 3]; g.num_vertices()];
        for i in 0..g.vx() {
            for j in 0..g.vy() {
                let v = d0(g.vertex_coords(i, j));
                d[g.vertex(i, j)] = [T::of(v[0]), T::of(v[1]), T::of(v[2])];
            }
        }
        self.start(t0, u, d)
    }

    /// Like [`Self::initial_state`] with the fields given on the grid.
    pub fn start(&mut self, t0: f64, u: MacVelocity<T>, d: Vec<Vec3<T>>) -> Result<MacState<T>, SolverError> {
        let g = &self.grid;
        if u.ux.len() != g.num_ux() || u.uy.len() != g.num_uy() || d.len() != g.num_vertices() {
            return Err(SolverError::Invalid(vec!["initial data does not match the MAC grid".into()]));
        }
        if !u.is_finite() {
            return Err(SolverError::NonFinite { what: "initial velocity".into(), step: 0 });
        }
        if d.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { what: "initial director".into(), step: 0 });
        }
        if let Some(h) = self.boundary_trace(t0) {
            for (k, (i, j)) in g.boundary_nodes().into_iter().enumerate() {
                let dv = d[g.vertex(i, j)];
                let mismatch = (0..3).map(|c| (dv[c].to_f64_lossy() - h[k][c]).abs()).fold(0.0, f64::max);
                if mismatch > 1e-9 {
                    return Err(SolverError::Boundary(format!(
                        "h(0) differs from d0 at boundary node {k} ({i}, {j}) by {mismatch:.3e}"
                    )));
                }
            }
        }
        let mut u = u;
        g.enforce_no_slip(&mut u);
        let (u, _) = self.project(&u, None)?;
        let state = MacState { t: t0, u, d, pressure: vec![T::zero(); g.num_cells()], step_index: 0 };
        self.history.clear();
        self.boundary.records.clear();
        self.history.push(self.record(&state));
        if let Some(b) = self.boundary_record(&state) {
            self.boundary.records.push(b);
        }
        Ok(state)
    }

    /// Continues from `state` as given (e.g. a snapshot) without projecting it.
    pub fn resume(&mut self, state: &MacState<T>) -> Result<(), SolverError> {
        let g = &self.grid;
        if state.u.ux.len() != g.num_ux()
            || state.u.uy.len() != g.num_uy()
            || state.d.len() != g.num_vertices()
            || state.pressure.len() != g.num_cells()
        {
            return Err(SolverError::Invalid(vec!["state does not match the MAC grid".into()]));
        }
        self.history.clear();
        self.boundary.records.clear();
        let rec = self.record(state);
        if !rec.is_finite() {
            return Err(SolverError::NonFinite { what: "resumed state".into(), step: state.step_index });
        }
        self.history.push(rec);
        if let Some(b) = self.boundary_record(state) {
            self.boundary.records.push(b);
        }
        Ok(())
    }

    fn boundary_trace(&self, t: f64) -> Option<Vec<Vec3<f64>>> {
        match (&self.regime.kind, &self.regime.h) {
            (BoundaryKind::Dirichlet, Some(h)) => Some(h.eval(t)),
            _ => None,
        }
    }

    fn tol_scale() -> f64 {
        (T::epsilon().to_f64_lossy() * 100.0).max(1e-13)
    }

    fn max_iters(&self) -> usize {
        50 * (self.grid.nx() + self.grid.ny()) + 200
    }

    /// `Δ_h d − ∇W(d)` at every vertex.
    pub fn molecular_field(&self, d: &[Vec3<T>]) -> Vec<Vec3<T>> {
        let mut g = self.grid.laplacian(d);
        for (gv, dv) in g.iter_mut().zip(d) {
            let w = self.potential.eval_grad_w(dv);
            for k in 0..3 {
                gv[k] = gv[k] - w[k];
            }
        }
        g
    }

    /// `d^{n+1}` from `d^n = state.d`, transported by `u`; Dirichlet vertices take `h(t^{n+1})`.
    pub fn director_step(&self, state: &MacState<T>, u: &MacVelocity<T>) -> Result<Vec<Vec3<T>>, SolverError> {
        let g = &self.grid;
        let np = g.num_vertices();
        let (dt, gamma, stab) = (T::of(self.dt), T::of(self.params.gamma), T::of(self.stabilization));
        let grad_d = g.director_gradient(&state.d);
        let b = g.coupling_apply(&state.d, &grad_d, u, T::of(self.params.alpha));
        let weights: Vec<T> = (0..g.vx()).flat_map(|i| (0..g.vy()).map(move |j| (i, j))).map(|(i, j)| T::of(g.vertex_weight(i, j))).collect();

        let mut fixed = vec![[T::zero(); 3]; np];
        if let Some(h) = self.boundary_trace(state.t + self.dt) {
            for (k, (i, j)) in g.boundary_nodes().into_iter().enumerate() {
                fixed[g.vertex(i, j)] = [T::of(h[k][0]), T::of(h[k][1]), T::of(h[k][2])];
            }
        }
        let free = &self.free;
        let apply = |x: &[T], out: &mut [T]| {
            g.stiffness_apply(x, out);
            for v in 0..np {
                out[v] = if free[v] { weights[v] * (T::one() + dt * gamma * stab) * x[v] + dt * gamma * out[v] } else { T::zero() };
            }
        };

        let mut next = fixed.clone();
        let mut xb = vec![T::zero(); np];
        let mut kxb = vec![T::zero(); np];
        for c in 0..3 {
            for v in 0..np {
                xb[v] = fixed[v][c];
            }
            g.stiffness_apply(&xb, &mut kxb);
            let mut rhs = vec![T::zero(); np];
            let mut x = vec![T::zero(); np];
            for v in 0..np {
                if !free[v] {
                    continue;
                }
                let dv = state.d[v];
                let w1 = self.potential.grad_w1(&dv);
                let w2 = self.potential.grad_w2(&dv);
                let r = -b[v][c] + gamma * (stab * dv[c] - w1[c] - w2[c]);
                rhs[v] = weights[v] * (dv[c] + dt * r) - dt * gamma * kxb[v];
                x[v] = dv[c];
            }
            let scale = rhs.iter().fold(0.0f64, |m, r| m.max(r.abs().to_f64_lossy())).max(f64::MIN_POSITIVE);
            conjugate_gradient("director CG", apply, &rhs, &mut x, Self::tol_scale() * scale, self.max_iters(), |_| {})?;
            for v in 0..np {
                if free[v] {
                    next[v][c] = x[v];
                }
            }
        }
        Ok(next)
    }

    /// `(u^{n+1}, p^{n+1})` from `u^n = state.u` with the elastic force built from `d`.
    pub fn velocity_step(&self, state: &MacState<T>, d: &[Vec3<T>]) -> Result<(MacVelocity<T>, Vec<T>), SolverError> {
        let g = &self.grid;
        let (dt, mu, lambda) = (T::of(self.dt), T::of(self.params.mu), T::of(self.params.lambda));
        let ca = T::of(g.cell_area());
        let force = self.elastic_force(d);
        let conv = g.convection(&state.u);
        let mut rhs = state.u.clone();
        rhs.axpy(-dt, &conv);
        rhs.axpy(-dt * lambda / ca, &force);
        if let Some(f) = &self.forcing {
            rhs.axpy(dt, f);
        }
        g.enforce_no_slip(&mut rhs);

        let nux = g.num_ux();
        let mut b: Vec<T> = rhs.ux.iter().chain(&rhs.uy).map(|v| *v * ca).collect();
        let mut x: Vec<T> = state.u.ux.iter().chain(&state.u.uy).copied().collect();
        let free: Vec<bool> = (0..g.vx())
            .flat_map(|i| (0..g.ny()).map(move |_| i))
            .map(|i| g.ux_free(i))
            .chain((0..g.nx()).flat_map(|_| (0..g.vy()).map(|j| g.uy_free(j))))
            .collect();
        for k in 0..b.len() {
            if !free[k] {
                b[k] = T::zero();
                x[k] = T::zero();
            }
        }
        let apply = |x: &[T], out: &mut [T]| {
            let v = MacVelocity { ux: x[..nux].to_vec(), uy: x[nux..].to_vec() };
            let k = g.viscous_apply(&v);
            for (o, (xi, ki)) in out.iter_mut().zip(x.iter().zip(k.ux.iter().chain(&k.uy))) {
                *o = ca * *xi + dt * mu * *ki;
            }
            for (o, f) in out.iter_mut().zip(&free) {
                if !f {
                    *o = T::zero();
                }
            }
        };
        let scale = b.iter().fold(0.0f64, |m, r| m.max(r.abs().to_f64_lossy())).max(f64::MIN_POSITIVE);
        conjugate_gradient("viscous CG", apply, &b, &mut x, Self::tol_scale() * scale, self.max_iters(), |_| {})?;
        let star = MacVelocity { ux: x[..nux].to_vec(), uy: x[nux..].to_vec() };
        let guess: Vec<T> = state.pressure.iter().map(|p| *p * dt).collect();
        let (u, phi) = self.project(&star, Some(guess))?;
        Ok((u, phi.into_iter().map(|p| p / dt).collect()))
    }

    /// `Bᵀ(W g)` on the faces, summed over free director vertices; the
    /// momentum balance receives `−λ/(h_x h_y)` times this.
    pub fn elastic_force(&self, d: &[Vec3<T>]) -> MacVelocity<T> {
        let g = &self.grid;
        let mol = self.molecular_field(d);
        let mut q = vec![[T::zero(); 3]; g.num_vertices()];
        for i in 0..g.vx() {
            for j in 0..g.vy() {
                let v = g.vertex(i, j);
                if self.free[v] {
                    let w = T::of(g.vertex_weight(i, j));
                    q[v] = [w * mol[v][0], w * mol[v][1], w * mol[v][2]];
                }
            }
        }
        let grad_d = g.director_gradient(d);
        g.coupling_adjoint(d, &grad_d, &q, T::of(self.params.alpha))
    }

    /// Discrete Leray projection `u − ∇_h φ`; returns the projected field and `φ`.
    pub fn project(&self, u: &MacVelocity<T>, guess: Option<Vec<T>>) -> Result<(MacVelocity<T>, Vec<T>), SolverError> {
        let g = &self.grid;
        let mut b: Vec<T> = g.divergence(u).into_iter().map(|v| -v).collect();
        remove_mean(&mut b);
        let scale = b.iter().fold(0.0f64, |m, r| m.max(r.abs().to_f64_lossy()));
        let tol = 1e-12f64.max(Self::tol_scale() * scale);
        let mut phi = guess.unwrap_or_else(|| vec![T::zero(); g.num_cells()]);
        conjugate_gradient("pressure CG", |x, out| g.pressure_apply(x, out), &b, &mut phi, tol, self.max_iters() * 4, remove_mean)?;
        remove_mean(&mut phi);
        let mut out = u.clone();
        g.subtract_gradient(&phi, T::one(), &mut out);
        Ok((out, phi))
    }

    pub fn record(&self, state: &MacState<T>) -> EnergyRecord {
        let g = &self.grid;
        let mol = self.molecular_field(&state.d);
        let mut potential = 0.0;
        let mut dir_diss = 0.0;
        for i in 0..g.vx() {
            for j in 0..g.vy() {
                let v = g.vertex(i, j);
                let w = g.vertex_weight(i, j);
                potential += 2.0 * w * self.potential.eval_w(&state.d[v]).to_f64_lossy();
                if self.free[v] {
                    dir_diss += w * mol[v].iter().map(|x| x.to_f64_lossy().powi(2)).sum::<f64>();
                }
            }
        }
        let grad_u = g.velocity_gradient(&state.u);
        EnergyRecord {
            t: state.t,
            kinetic: g.kinetic(&state.u).to_f64_lossy(),
            elastic: g.elastic(&state.d).to_f64_lossy(),
            potential,
            visc_diss: self.params.mu * g.gradient_norm_sq(&grad_u).to_f64_lossy(),
            dir_diss,
            reg_diss: 0.0,
            work: self.forcing.as_ref().map(|f| g.inner(f, &state.u).to_f64_lossy()).unwrap_or(0.0),
            fnorm: self.fnorm,
            divmax: g.divergence(&state.u).iter().fold(0.0, |m, v| m.max(v.abs().to_f64_lossy())),
        }
    }

    fn boundary_record(&self, state: &MacState<T>) -> Option<BoundaryRecord> {
        if self.regime.kind != BoundaryKind::Dirichlet {
            return None;
        }
        let g = &self.grid;
        let mol = self.molecular_field(&state.d);
        let mut h = Vec::new();
        let mut dn = Vec::new();
        for (i, j) in g.boundary_nodes() {
            let v = g.vertex(i, j);
            let s = -g.vertex_weight(i, j) / g.boundary_length(i, j);
            h.push(state.d[v].map(|x| x.to_f64_lossy()));
            dn.push(mol[v].map(|x| s * x.to_f64_lossy()));
        }
        Some(BoundaryRecord { t: state.t, h, normal_derivative: dn })
    }

    /// One step: director with `u^n`, then velocity with `d^{n+1}`.
    pub fn advance(&mut self, state: &mut MacState<T>) -> Result<EnergyRecord, SolverError> {
        let step = state.step_index + 1;
        let d = self.director_step(state, &state.u)?;
        if d.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { what: "director".into(), step });
        }
        let (u, p) = self.velocity_step(state, &d)?;
        if !u.is_finite() {
            return Err(SolverError::NonFinite { what: "velocity".into(), step });
        }
        let next = MacState { t: state.t + self.dt, u, d, pressure: p, step_index: step };
        let rec = self.record(&next);
        if !rec.is_finite() {
            return Err(SolverError::NonFinite { what: "energy".into(), step });
        }
        let brec = self.boundary_record(&next);
        if let Some(last) = self.history.last() {
            let (e0, e1) = (last.total(self.params.lambda), rec.total(self.params.lambda));
            // energy the forcing and the boundary trace may supply this step
            let mut supply = 2.0 * self.dt * rec.work.abs();
            if let (Some(b1), Some(b0)) = (&brec, self.boundary.records.last()) {
                let mut pairing = 0.0;
                for (k, len) in self.boundary.lengths.iter().enumerate() {
                    for c in 0..3 {
                        pairing += len * (b1.h[k][c] - b0.h[k][c]) * b1.normal_derivative[k][c];
                    }
                }
                supply += 2.0 * self.params.lambda * pairing.abs();
            }
            if e0 > 0.0 && e1 > 10.0 * (e0 + supply) {
                return Err(SolverError::CflAbort { step, t: next.t, ratio: e1 / e0 });
            }
        }
        if let Some(b) = brec {
            self.boundary.records.push(b);
        }
        *state = next;
        self.history.push(rec);
        Ok(rec)
    }

    /// Advances until `t_end`, calling `observe` after every step.
    pub fn run(
        &mut self,
        state: &mut MacState<T>,
        t_end: f64,
        mut observe: impl FnMut(&MacState<T>, &EnergyRecord),
    ) -> Result<(), SolverError> {
        let steps = ((t_end - state.t) / self.dt).round().max(0.0) as u64;
        for _ in 0..steps {
            let rec = self.advance(state)?;
            observe(state, &rec);
        }
        Ok(())
    }
}
