//! Density matrices, Lindblad dynamics and time integration for 2–4 level
//! systems.

mod density;
mod evolve;
mod hamiltonian;
mod integrator;
mod lindblad;
pub mod ops;
mod steady;

pub use density::DensityMatrix;
pub use evolve::{evolve, evolve_with, EvolveOptions, Trajectory};
pub use hamiltonian::{Envelope, Hamiltonian};
pub use integrator::{Dopri5, StepStats};
pub use lindblad::{expectation, lindblad_rhs, liouvillian, CollapseChannel, LindbladModel};
pub use steady::steady_state;

pub use nalgebra::DMatrix;
pub use num_complex::Complex64;

/// Complex scalar used throughout.
pub type C64 = Complex64;
/// Dense complex matrix; operators and density matrices share this type.
pub type CMatrix = DMatrix<C64>;

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 4;

/// Tolerance on max |ρ_ij − conj(ρ_ji)|.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on |Tr ρ − 1|.
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue accepted (and clamped) by the positivity guard.
pub const POSITIVITY_TOL: f64 = 1e-8;
