pub mod bounded;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod galerkin;
pub mod io;
pub mod potential;
pub mod presets;
pub mod scalar;
pub mod stress;

pub use bounded::{MacSolver, MacState};
pub use diagnostics::EnergyRecord;
pub use error::SolverError;
pub use fields::{Grid, VectorField};
pub use galerkin::{SchemeParams, SolverState, SpectralSolver};
pub use potential::Potential;
pub use stress::ModelParams;

pub type SpectralSolverF64 = SpectralSolver<f64>;
pub type SpectralSolverF32 = SpectralSolver<f32>;
pub type SolverStateF64 = SolverState<f64>;
pub type SolverStateF32 = SolverState<f32>;
pub type MacSolverF64 = MacSolver<f64>;
pub type MacSolverF32 = MacSolver<f32>;
pub type VectorFieldF64 = VectorField<f64>;
pub type VectorFieldF32 = VectorField<f32>;
