use super::BoundaryHistory;
use crate::diagnostics::EnergyRecord;
use crate::error::SolverError;
use crate::stress::ModelParams;

/// One step of the energy balance with boundary work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletStep {
    pub t: f64,
    /// `(E^{n+1} − E^n)/(2 dt)`
    pub energy_rate: f64,
    pub dissipation: f64,
    pub work: f64,
    /// `λ ⟨h_t, ∂_n d⟩_Γ` by boundary quadrature.
    pub boundary_work: f64,
    /// `energy_rate + dissipation − work − boundary_work`
    pub residual: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletReport {
    pub steps: Vec<DirichletStep>,
    pub tol: f64,
    pub max_residual: f64,
    pub max_abs_residual: f64,
    pub max_abs_boundary_work: f64,
    /// The boundary pairing is an `L²(Γ)` quadrature standing in for the `H^{-1/2} × H^{1/2}` duality.
    pub surrogate: &'static str,
}

impl DirichletReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| !s.flagged)
    }
}

/// Energy balance of a Dirichlet run, step by step. A step is flagged when
/// energy is produced beyond the forcing and boundary work by more than `tol`.
pub fn dirichlet_energy_check(
    history: &[EnergyRecord],
    boundary: &BoundaryHistory,
    params: &ModelParams,
    tol: f64,
) -> Result<DirichletReport, SolverError> {
    if boundary.records.is_empty() {
        return Err(SolverError::Boundary("run has no Dirichlet boundary records".into()));
    }
    if boundary.records.len() != history.len() {
        return Err(SolverError::Boundary(format!(
            "{} energy records but {} boundary records",
            history.len(),
            boundary.records.len()
        )));
    }
    if boundary.records.iter().any(|r| r.h.len() != boundary.lengths.len() || r.normal_derivative.len() != boundary.lengths.len()) {
        return Err(SolverError::Boundary("boundary records do not match the boundary quadrature".into()));
    }
    let mut steps = Vec::with_capacity(history.len().saturating_sub(1));
    for n in 1..history.len() {
        let (prev, next) = (&history[n - 1], &history[n]);
        let dt = next.t - prev.t;
        let (b0, b1) = (&boundary.records[n - 1], &boundary.records[n]);
        let mut pairing = 0.0;
        for (k, len) in boundary.lengths.iter().enumerate() {
            for c in 0..3 {
                pairing += len * (b1.h[k][c] - b0.h[k][c]) / dt * b1.normal_derivative[k][c];
            }
        }
        let boundary_work = params.lambda * pairing;
        let energy_rate = (next.total(params.lambda) - prev.total(params.lambda)) / (2.0 * dt);
        let dissipation = next.dissipation(params);
        let residual = energy_rate + dissipation - next.work - boundary_work;
        steps.push(DirichletStep {
            t: next.t,
            energy_rate,
            dissipation,
            work: next.work,
            boundary_work,
            residual,
            flagged: !(residual <= tol),
        });
    }
    let fold = |f: fn(&DirichletStep) -> f64| steps.iter().map(f).fold(0.0f64, f64::max);
    Ok(DirichletReport {
        tol,
        max_residual: steps.iter().map(|s| s.residual).fold(f64::NEG_INFINITY, f64::max),
        max_abs_residual: fold(|s| s.residual.abs()),
        max_abs_boundary_work: fold(|s| s.boundary_work.abs()),
        surrogate: "boundary work uses L2(boundary) trapezoidal quadrature of h_t . dn d",
        steps,
    })
}
