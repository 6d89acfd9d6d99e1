//! Spectral Galerkin solver for evolutionary equations
//! `(∂_{t,ν} M(∂_{t,ν}) + A) u = f` in the Fourier–Laplace domain.

pub mod cli;
pub mod convergence;
pub mod error;
pub mod linalg;
pub mod material;
pub mod solver;
pub mod spaces;
pub mod spatial;

pub use error::{Error, Result};
