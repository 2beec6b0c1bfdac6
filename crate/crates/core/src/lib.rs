//! Steklov eigenvalues of `Δ²u - τΔu = 0` with spectral parameter on the
//! boundary.
//!
//! * [`ball`]: closed-form spectrum on balls in any dimension.
//! * [`geometry`], [`solver`]: Galerkin eigensolver on planar star domains
//!   with trial functions that solve the interior equation exactly.
//! * [`shape`]: symmetric functions of eigenvalues and their Hadamard shape
//!   derivatives.
//! * [`concentration`]: the Neumann problem with mass concentrating at the
//!   boundary of the disk.
//! * [`iso`]: numerical checks of the isoperimetric inequality for `λ₂`.

pub mod ball;
pub mod concentration;
pub mod error;
pub mod geometry;
pub mod iso;
pub mod quadrature;
pub mod shape;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
