//! Runtime checks built from the energy law, the a priori norm classes and the
//! weak formulation.

mod apriori;
mod energy;
mod inequality;
mod interpolation;
mod weak;

pub use apriori::{apriori_tracker, AprioriReport, AprioriRow};
pub use energy::{energy_law_residual, energy_record, record_from_parts, total_energy, EnergyRecord, Regularization, StateParts};
pub use inequality::{default_inequality_constant, energy_inequality_check, InequalityReport, InequalityStep};
pub use interpolation::{
    exponents_consistent, interpolation_check, interpolation_check_weighted, interpolation_row, weighted_lp, InterpolationReport,
    InterpolationRow, INTERP_A, INTERP_Q, INTERP_S,
};
pub use weak::{test_functions, w13_norm, weak_residual, WeakForm};
