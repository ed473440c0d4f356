//! Discontinuous Galerkin time-domain solver for the two-dimensional TE_z
//! Maxwell system with a Kerr (cubic) nonlinearity on Cartesian meshes.

pub mod basis;
pub mod cli;
pub mod config;
pub mod constitutive;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod field;
pub mod mesh;
pub mod operator;
pub mod projection;
pub mod reduce;
pub mod scenario;
pub mod space;
pub mod timestep;

pub use error::{Error, Result};
