//! Split-form kinetic-energy-preserving DGSEM for the compressible
//! Navier-Stokes equations, with sub-grid-scale models and turbulence
//! diagnostics.

pub mod analysis;
pub mod config;
pub mod driver;
pub mod error;
pub mod field;
pub mod init;
pub mod mesh;
pub mod operators;
pub mod physics;
pub mod sgs;
pub mod spatial;
pub mod tensor;
pub mod timeint;

pub use error::{Error, Result};
