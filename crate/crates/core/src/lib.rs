//! Axisymmetric Navier-Stokes laboratory.
//!
//! Solvers for the swirl quantity `Γ = r v^θ` and the full axisymmetric
//! system on a cell-centered `(r, z)` mesh, together with scale-invariant
//! drift norms, oscillation moduli, estimate checks and rescaling diagnostics.

pub mod drift;
pub mod error;
pub mod field;
pub mod gamma;
pub mod grid;
pub mod io;
pub mod liouville;
pub mod norms;
pub mod ns;
pub mod poisson;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Parity, ScalarField, VectorFieldCyl};
pub use grid::{Ball, Grid};
pub use trajectory::{ParabolicCylinder, Trajectory};
