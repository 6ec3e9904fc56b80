use crate::fields::{lp_norm, FieldError, Fourier, Magnitudes, Spectrum, TensorField, VectorField};
use crate::potential::Potential;
use crate::scalar::Scalar;
use crate::stress::ModelParams;

/// Energies and dissipation rates at one instant.
///
/// `elastic = ∫|∇d|²`, `potential = 2∫W(d)`, `dir_diss = ‖Δd − ∇W(d)‖²`;
/// the total energy weighs the last three by `λ` (see [`EnergyRecord::total`]).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyRecord {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub potential: f64,
    pub visc_diss: f64,
    pub dir_diss: f64,
    pub reg_diss: f64,
    pub work: f64,
    pub fnorm: f64,
    pub divmax: f64,
}

impl EnergyRecord {
    pub const CSV_HEADER: &'static str = "t,kinetic,elastic,potential,visc_diss,dir_diss,reg_diss,work,fnorm,divmax";

    /// `∫|u|² + λ(∫|∇d|² + 2∫W)`
    pub fn total(&self, lambda: f64) -> f64 {
        self.kinetic + lambda * (self.elastic + self.potential)
    }

    /// Dissipation rate `μ‖∇u‖² + λγ‖g‖² + (1/M)‖∇u‖_r^r`.
    pub fn dissipation(&self, params: &ModelParams) -> f64 {
        self.visc_diss + params.lambda * params.gamma * self.dir_diss + self.reg_diss
    }

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.kinetic,
            self.elastic,
            self.potential,
            self.visc_diss,
            self.dir_diss,
            self.reg_diss,
            self.work,
            self.fnorm,
            self.divmax,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        EnergyRecord {
            t: v[0],
            kinetic: v[1],
            elastic: v[2],
            potential: v[3],
            visc_diss: v[4],
            dir_diss: v[5],
            reg_diss: v[6],
            work: v[7],
            fnorm: v[8],
            divmax: v[9],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Mollification index and exponent of the `(1/M)|∇u|^{r−2}∇u` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub m: usize,
    pub r: f64,
}

/// `(∫|u|², ∫|∇d|², 2∫W(d))` by rectangle rule with spectral gradients.
pub fn total_energy<T: Scalar>(
    fourier: &Fourier<T>,
    u: &VectorField<T>,
    d: &VectorField<T>,
    potential: &Potential<T>,
) -> Result<(f64, f64, f64), FieldError> {
    u.check_finite("u")?;
    let grad_d = fourier.gradient(d)?;
    let kinetic = lp_norm(u, 2.0)?.to_f64_lossy().powi(2);
    let elastic = lp_norm(&grad_d, 2.0)?.to_f64_lossy().powi(2);
    let pot = 2.0 * potential.integral(d).to_f64_lossy();
    Ok((kinetic, elastic, pot))
}

/// Precomputed fields of one periodic state.
pub struct StateParts<'a, T: Scalar> {
    pub u: &'a VectorField<T>,
    pub u_hat: &'a Spectrum<T>,
    pub grad_u: &'a TensorField<T>,
    pub d: &'a VectorField<T>,
    pub grad_d: &'a TensorField<T>,
    /// `Δd − ∇W(d)`
    pub g: &'a VectorField<T>,
}

/// Full record for a periodic state.
#[allow(clippy::too_many_arguments)]
pub fn energy_record<T: Scalar>(
    fourier: &Fourier<T>,
    t: f64,
    u: &VectorField<T>,
    d: &VectorField<T>,
    params: &ModelParams,
    potential: &Potential<T>,
    forcing: Option<&VectorField<T>>,
    fnorm: f64,
    reg: Option<Regularization>,
) -> Result<EnergyRecord, FieldError> {
    u.check_finite("u")?;
    d.check_finite("d")?;
    let u_hat = fourier.forward(u);
    let d_hat = fourier.forward(d);
    let grad_u = fourier.gradient_of(&u_hat);
    let grad_d = fourier.gradient_of(&d_hat);
    let lap_d = fourier.inverse(&fourier.laplacian_spectrum(&d_hat));
    let g = lap_d.axpy(-T::one(), &potential.grad_field(d));
    let parts = StateParts { u, u_hat: &u_hat, grad_u: &grad_u, d, grad_d: &grad_d, g: &g };
    record_from_parts(fourier, t, &parts, params, potential, forcing, fnorm, reg)
}

#[allow(clippy::too_many_arguments)]
pub fn record_from_parts<T: Scalar>(
    fourier: &Fourier<T>,
    t: f64,
    parts: &StateParts<'_, T>,
    params: &ModelParams,
    potential: &Potential<T>,
    forcing: Option<&VectorField<T>>,
    fnorm: f64,
    reg: Option<Regularization>,
) -> Result<EnergyRecord, FieldError> {
    let sq = |x: T| x.to_f64_lossy().powi(2);
    let reg_diss = match reg {
        Some(Regularization { m, r }) => {
            let mags = parts.grad_u.magnitudes();
            let s: f64 = mags.iter().map(|m| m.to_f64_lossy().powf(r)).sum();
            s * fourier.grid().cell_volume() / m as f64
        }
        None => 0.0,
    };
    Ok(EnergyRecord {
        t,
        kinetic: sq(lp_norm(parts.u, 2.0)?),
        elastic: sq(lp_norm(parts.grad_d, 2.0)?),
        potential: 2.0 * potential.integral(parts.d).to_f64_lossy(),
        visc_diss: params.mu * sq(lp_norm(parts.grad_u, 2.0)?),
        dir_diss: sq(lp_norm(parts.g, 2.0)?),
        reg_diss,
        work: forcing.map(|f| f.inner(parts.u).to_f64_lossy()).unwrap_or(0.0),
        fnorm,
        divmax: fourier.divergence_of(parts.u_hat).max_abs().to_f64_lossy(),
    })
}

/// `(E^{n+1} − E^n)/(2 dt) + D^{n+1} − ⟨f, u^{n+1}⟩`; positive values mean
/// energy was produced beyond what the forcing supplies.
pub fn energy_law_residual(prev: &EnergyRecord, next: &EnergyRecord, dt: f64, params: &ModelParams) -> f64 {
    (next.total(params.lambda) - prev.total(params.lambda)) / (2.0 * dt) + next.dissipation(params) - next.work
}
