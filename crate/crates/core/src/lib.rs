//! Single-photon transport through a waveguide-coupled optomechanical cavity
//! and heralded generation of mechanical NOON states.
//!
//! Frequencies and rates are measured in units of the mechanical frequency
//! (`omega_M = 1`) unless a function says otherwise.

pub mod dynamics;
pub mod model;
pub mod noon;
pub mod numerics;
pub mod transport;

pub use numerics::{Complex, ComplexMatrix, NumericsError, Real};

pub type C64 = Complex<f64>;
pub type CMatrix = ComplexMatrix<f64>;
