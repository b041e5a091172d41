//! Boundary-integral spectral laboratory for the biharmonic Steklov operators
//! on smooth bounded planar domains.

pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod layer;
pub mod nodal;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod steklov;
pub mod trig;
pub mod verify;

pub use error::{Result, SteklovError};
