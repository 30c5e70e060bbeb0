//! Particle methods for geodesic fluid flows.
//!
//! Landmark particles (position + momentum) and first-order jet particles
//! (adding a deformation frame and its conjugate momentum) are turned into
//! smooth velocity fields by kernel interpolation. The induced
//! finite-dimensional Hamiltonian dynamics are integrated with RK4 or the
//! implicit midpoint rule, and every conserved quantity of the flow can be
//! monitored along the way. A 2D vortex-blob solver serves as a reference.

pub mod cli;
pub mod conserve;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod interp;
pub mod kernel;
pub mod output;
pub mod scenario;
pub mod system;
pub mod verify;
pub mod vortex;

pub use error::{Error, Result};
pub use kernel::{KernelFamily, RadialKernel};
