use crate::error::SolverError;
use crate::fields::{lp_norm, Fourier, VectorField};
use crate::galerkin::SolverState;
use crate::potential::Potential;
use crate::scalar::Scalar;
use crate::stress::{elastic_stress_from_g, ModelParams};

/// Norms of one snapshot entering the a priori estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriRow {
    pub t: f64,
    pub u_l2: f64,
    pub grad_u_l2: f64,
    pub u_l10_3: f64,
    pub grad_d_l2: f64,
    pub lap_d_l2: f64,
    /// Difference quotient with the neighbouring snapshot.
    pub dt_d_l3_2: f64,
    pub grad_d_l10_3: f64,
    /// Norms of `∇d⊙∇d + α g⊗d − (1−α) d⊗g`.
    pub stress_l5_3: f64,
    pub stress_l3_2: f64,
    /// `‖u‖² ≤ E*` and `λ‖∇d‖² ≤ E*`.
    pub within_ceiling: bool,
}

impl AprioriRow {
    pub const CSV_HEADER: &'static str =
        "t,u_l2,grad_u_l2,u_l10_3,grad_d_l2,lap_d_l2,dt_d_l3_2,grad_d_l10_3,stress_l5_3,stress_l3_2,within_ceiling";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.u_l2,
            self.grad_u_l2,
            self.u_l10_3,
            self.grad_d_l2,
            self.lap_d_l2,
            self.dt_d_l3_2,
            self.grad_d_l10_3,
            self.stress_l5_3,
            self.stress_l3_2,
            u8::from(self.within_ceiling)
        )
    }

    pub fn values(&self) -> [f64; 9] {
        [
            self.u_l2,
            self.grad_u_l2,
            self.u_l10_3,
            self.grad_d_l2,
            self.lap_d_l2,
            self.dt_d_l3_2,
            self.grad_d_l10_3,
            self.stress_l5_3,
            self.stress_l3_2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport {
    /// `E*`, the bound on the total energy (initial energy plus forcing budget).
    pub energy_ceiling: f64,
    pub rows: Vec<AprioriRow>,
}

impl AprioriReport {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within_ceiling)
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.t.is_finite() && r.values().iter().all(|v| v.is_finite()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(AprioriRow::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }
}

/// Time series of the a priori norms over `snapshots` (ordered in time).
/// The ceilings compare against `energy_ceiling` with relative slack `1e-9`.
pub fn apriori_tracker<T: Scalar>(
    fourier: &Fourier<T>,
    params: &ModelParams,
    potential: &Potential<T>,
    snapshots: &[SolverState<T>],
    energy_ceiling: f64,
) -> Result<AprioriReport, SolverError> {
    let stress_params = ModelParams { lambda: 1.0, ..*params };
    let ceiling = energy_ceiling * (1.0 + 1e-9) + 1e-300;
    let mut rows = Vec::with_capacity(snapshots.len());
    for (k, s) in snapshots.iter().enumerate() {
        let f = fourier;
        let norm = |v: &dyn Fn() -> Result<T, crate::fields::FieldError>| -> Result<f64, SolverError> { Ok(v()?.to_f64_lossy()) };
        let grad_u = f.gradient(&s.u)?;
        let dh = f.forward(&s.d);
        let grad_d = f.gradient_of(&dh);
        let lap_d = f.inverse(&f.laplacian_spectrum(&dh));
        let g = lap_d.axpy(-T::one(), &potential.grad_field(&s.d));
        let stress = elastic_stress_from_g(&s.d, &grad_d, &g, &stress_params);
        let neighbour = if k > 0 { snapshots.get(k - 1) } else { snapshots.get(1) };
        let dt_d = match neighbour {
            Some(o) if o.t != s.t => {
                let q: VectorField<T> = s.d.axpy(-T::one(), &o.d).scaled(T::of(1.0 / (s.t - o.t)));
                norm(&|| lp_norm(&q, 1.5))?
            }
            _ => 0.0,
        };
        let u_l2 = norm(&|| lp_norm(&s.u, 2.0))?;
        let grad_d_l2 = norm(&|| lp_norm(&grad_d, 2.0))?;
        rows.push(AprioriRow {
            t: s.t,
            u_l2,
            grad_u_l2: norm(&|| lp_norm(&grad_u, 2.0))?,
            u_l10_3: norm(&|| lp_norm(&s.u, 10.0 / 3.0))?,
            grad_d_l2,
            lap_d_l2: norm(&|| lp_norm(&lap_d, 2.0))?,
            dt_d_l3_2: dt_d,
            grad_d_l10_3: norm(&|| lp_norm(&grad_d, 10.0 / 3.0))?,
            stress_l5_3: norm(&|| lp_norm(&stress, 5.0 / 3.0))?,
            stress_l3_2: norm(&|| lp_norm(&stress, 1.5))?,
            within_ceiling: u_l2 * u_l2 <= ceiling && params.lambda * grad_d_l2 * grad_d_l2 <= ceiling,
        });
    }
    Ok(AprioriReport { energy_ceiling, rows })
}
