//! Numerical laboratory for unsteady potential flow in a perturbed right-angle
//! corner: straightening maps, transformed coefficients, co-normal boundary
//! treatment, extension and mollification, a linear hyperbolic solver with
//! weighted energy monitors, compatibility jets and a Picard iteration.

pub mod coefficients;
pub mod compatibility;
pub mod data;
pub mod energy;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod grid;
pub mod linear_solver;
pub mod nonlinear;
pub mod scenario;
pub mod setup;

pub use error::{Error, Result};
