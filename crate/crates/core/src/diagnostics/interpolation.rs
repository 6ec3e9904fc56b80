use crate::error::SolverError;
use crate::fields::{lp_norm, TensorField};
use crate::scalar::Scalar;

/// Integrability exponent of `∇d` on the left-hand side.
pub const INTERP_S: f64 = 10.0 / 3.0;
/// Weight of the `L²` factor.
pub const INTERP_A: f64 = 0.4;
/// Time exponent `2/(1 − a)`.
pub const INTERP_Q: f64 = 10.0 / 3.0;

/// `|1/s − (1−a)/6 − a/2|` and `|q − 2/(1−a)|` both vanish to rounding.
pub fn exponents_consistent(s: f64, a: f64, q: f64) -> bool {
    (1.0 / s - (1.0 - a) / 6.0 - a / 2.0).abs() <= 1e-15 && (q - 2.0 / (1.0 - a)).abs() <= 1e-14
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationRow {
    pub t: f64,
    /// `‖∇d‖_{L^s}`
    pub lhs: f64,
    /// `‖∇d‖_{L²}^a ‖∇d‖_{L⁶}^{1−a}`
    pub rhs: f64,
    /// `lhs/rhs`, or 0 when both vanish.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationReport {
    pub rows: Vec<InterpolationRow>,
    /// Smallest admissible `c₁`: the running maximum of the ratios.
    pub c1: f64,
}

/// One row from the three norms.
pub fn interpolation_row(t: f64, l2: f64, ls: f64, l6: f64) -> InterpolationRow {
    let rhs = l2.powf(INTERP_A) * l6.powf(1.0 - INTERP_A);
    let ratio = if ls == 0.0 && rhs == 0.0 { 0.0 } else { ls / rhs };
    InterpolationRow { t, lhs: ls, rhs, ratio }
}

/// Weighted `L^p` norm of pointwise magnitudes, for grids without a uniform cell volume.
pub fn weighted_lp(mags: &[f64], weights: &[f64], p: f64) -> f64 {
    mags.iter().zip(weights).map(|(m, w)| w * m.powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Checks `‖∇d‖_{L^s} ≤ c₁ ‖∇d‖_{L²}^a ‖∇d‖_{L⁶}^{1−a}` per snapshot.
pub fn interpolation_check<T: Scalar>(grads: &[(f64, &TensorField<T>)]) -> Result<InterpolationReport, SolverError> {
    assert!(exponents_consistent(INTERP_S, INTERP_A, INTERP_Q));
    let mut rows = Vec::with_capacity(grads.len());
    for (t, g) in grads {
        let n = |p: f64| -> Result<f64, SolverError> { Ok(lp_norm(*g, p)?.to_f64_lossy()) };
        rows.push(interpolation_row(*t, n(2.0)?, n(INTERP_S)?, n(6.0)?));
    }
    Ok(report(rows))
}

/// Same check from precomputed magnitudes and quadrature weights.
pub fn interpolation_check_weighted(samples: &[(f64, Vec<f64>)], weights: &[f64]) -> InterpolationReport {
    assert!(exponents_consistent(INTERP_S, INTERP_A, INTERP_Q));
    let rows = samples
        .iter()
        .map(|(t, m)| interpolation_row(*t, weighted_lp(m, weights, 2.0), weighted_lp(m, weights, INTERP_S), weighted_lp(m, weights, 6.0)))
        .collect();
    report(rows)
}

fn report(rows: Vec<InterpolationRow>) -> InterpolationReport {
    let c1 = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    InterpolationReport { rows, c1 }
}
