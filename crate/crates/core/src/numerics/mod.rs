//! Dense complex linear algebra, special functions, quadrature and ODE
//! stepping. Nothing in here knows about optomechanics.
//!
//! Every kernel is generic over a [`Real`] scalar so the same code runs in
//! `f32` and `f64`; the physics layers above pin `f64`.

mod eigen;
mod expm;
mod fidelity;
mod laguerre;
mod matrix;
pub mod ode;
pub mod quadrature;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use thiserror::Error;

pub use eigen::{hermitian_eig, EigenDecomposition};
pub use expm::matrix_exp;
pub use fidelity::{fidelity_with_pure, uhlmann_fidelity};
pub use laguerre::assoc_laguerre;
pub use matrix::ComplexMatrix;

pub type Complex<T> = num_complex::Complex<T>;

/// Real floating-point scalar accepted by the numerical kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every `Real` can represent (a rounding of)
    /// any finite `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },
    #[error("quadrature did not reach tolerance on [{a}, {b}] (estimated error {error:e})")]
    Quadrature { a: f64, b: f64, error: f64 },
}

pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
