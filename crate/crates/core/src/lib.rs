//! Finite element solver for the 2D incompressible magnetohydrodynamic
//! equations on the unit square.
//!
//! Velocity and pressure use Taylor–Hood P2/P1 elements, the magnetic field
//! uses H¹-conforming P2 elements with a vanishing tangential trace. Time
//! stepping is a modified Crank–Nicolson scheme with explicit extrapolation
//! of the nonlinear coefficients and an incremental pressure-correction
//! projection, so every step solves one coupled (H, û) system followed by a
//! Darcy-type saddle problem for (u, p).

pub mod assembly;
pub mod cli;
pub mod error;
pub mod fem;
pub mod harness;
pub mod linsolve;
pub mod mesh;
pub mod scheme;

pub use error::{MhdError, Result};
