//! Numerical laboratory for the degenerate wave equation
//! `phi_tt - div(A grad phi) = 0` on the cylinder `T x (0,1)` with
//! `A = diag(1, r^alpha)`.
//!
//! Fields are expanded in the separated eigenbasis of the flux-form
//! operator and propagated exactly in time, so spatial discretization is the
//! only error source in every audit.

pub mod discretization;
pub mod error;
pub mod evolution;
pub mod model;
pub mod observables;
pub mod quadrature;
pub mod spectral;
mod tridiag;

pub use discretization::{build_radial_grid, CylinderGrid, Fault, GridField, ModeOperator, RadialGrid};
pub use error::{Error, Result};
pub use evolution::{InitialData, ModalForcing, ModalState, Trajectory};
pub use model::{Geometry, ModelParams, QuasimodeSpec};
pub use observables::{HardyReport, MultiplierAudit, ObservationReport};
pub use spectral::{BasisElement, Branch, ModalCoeffs, SpectralBasis};
