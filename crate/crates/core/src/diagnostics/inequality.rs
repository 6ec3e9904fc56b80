use super::EnergyRecord;
use crate::stress::ModelParams;

/// Default constant of the stepwise energy inequality on a domain with
/// Poincaré constant `c_p`: `(1 + c_p²)/μ`.
///
/// From `½ dE/dt + D = ⟨f, u⟩` and `⟨f, u⟩ ≤ ‖f‖_{H⁻¹}(1 + c_p²)^{1/2}‖∇u‖`
/// one gets `dE/dt + D ≤ (1 + c_p²)/μ ‖f‖²_{H⁻¹}`. This is a surrogate, not a
/// sharp constant.
pub fn default_inequality_constant(poincare: f64, mu: f64) -> f64 {
    (1.0 + poincare * poincare) / mu
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityStep {
    pub t: f64,
    /// `(E^{n+1} − E^n)/dt + D^{n+1}`
    pub lhs: f64,
    /// `C ‖f‖²_{H⁻¹}`
    pub rhs: f64,
    /// `rhs + tol − lhs`; negative on violation.
    pub margin: f64,
    /// Every dissipation entry of the record is non-negative.
    pub dissipation_valid: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub constant: f64,
    pub tol: f64,
    pub steps: Vec<InequalityStep>,
    pub min_margin: f64,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.passed)
    }

    pub fn failures(&self) -> usize {
        self.steps.iter().filter(|s| !s.passed).count()
    }
}

/// Checks `dE/dt + D ≤ C‖f‖²_{H⁻¹} + tol` between consecutive records. A
/// step also fails when any recorded dissipation is negative, since the
/// inequality is meaningless for such records.
pub fn energy_inequality_check(history: &[EnergyRecord], params: &ModelParams, constant: f64, tol: f64) -> InequalityReport {
    let mut steps = Vec::with_capacity(history.len().saturating_sub(1));
    for w in history.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let dt = next.t - prev.t;
        let lhs = (next.total(params.lambda) - prev.total(params.lambda)) / dt + next.dissipation(params);
        let rhs = constant * next.fnorm * next.fnorm;
        let margin = rhs + tol - lhs;
        let dissipation_valid = next.visc_diss >= 0.0 && next.dir_diss >= 0.0 && next.reg_diss >= 0.0;
        steps.push(InequalityStep { t: next.t, lhs, rhs, margin, dissipation_valid, passed: dissipation_valid && margin >= 0.0 });
    }
    let min_margin = steps.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min);
    InequalityReport { constant, tol, steps, min_margin }
}
