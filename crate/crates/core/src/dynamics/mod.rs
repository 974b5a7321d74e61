//! Open-system route: single-photon wavepacket driving of the lossy,
//! thermally damped optomechanical cavity.
//!
//! A travelling one-photon pulse is handled with the Fock-input hierarchy:
//! besides the physical state `rho11` the integrator carries the coherence
//! `rho10` and the photon-free reference `rho00`, coupled through source
//! terms proportional to the pulse envelope. The block engine in
//! [`hierarchy`] stores only the photon-number blocks that can be populated
//! and propagates the no-jump evolution exactly, so the step size is set by
//! the pulse and the decay rates rather than by `omega_M`.

mod dense;
mod hierarchy;
mod spectrum;
pub mod tensor;

use thiserror::Error;

use crate::model::ModelError;
use crate::numerics::NumericsError;

pub use dense::{build_hamiltonian, lindblad_superop, LindbladSuperop};
pub use hierarchy::{
    evolve_hierarchy, final_sideband_populations, output_flux, Channels, EvolveOptions, FluxReport, Hierarchy,
    HierarchySpec, HierarchyState, HierarchyTrajectory, InitialMechanics, RING_DOWN_TOL,
};
pub use spectrum::{output_spectrum_me, CorrelationGrid, MeSpectrum, SpectrumOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("trace drifted by {drift:e} at t = {time} (integrator step too large?)")]
    TraceDrift { time: f64, drift: f64 },
    #[error("cavity still holds {residual:e} of the photon at the end of the run")]
    RingDownIncomplete { residual: f64 },
    #[error("output flux {flux:e} < 0 at t = {time}")]
    NegativeFlux { time: f64, flux: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Gaussian single-photon envelope `f(t) = A exp(-(t - T/2)^2 / (T/8)^2)` on
/// `[0, T]` with `T = 16 / d` and `int |f|^2 dt = 1`. Its intensity spectrum
/// is the Gaussian of width `d` used by the transport module.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseShape {
    d: f64,
    duration: f64,
    amplitude: f64,
}

impl PulseShape {
    pub fn new(d: f64) -> Result<Self, DynamicsError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(DynamicsError::InvalidInput(format!("pulse width d = {d} must be positive")));
        }
        let duration = 16.0 / d;
        let sigma = duration / 8.0;
        let amplitude = (1.0 / (sigma * (std::f64::consts::PI / 2.0).sqrt())).sqrt();
        Ok(Self { d, duration, amplitude })
    }

    pub fn width(&self) -> f64 {
        self.d
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn peak(&self) -> f64 {
        self.amplitude
    }

    pub fn envelope(&self, t: f64) -> f64 {
        if !(0.0..=self.duration).contains(&t) {
            return 0.0;
        }
        let s = self.duration / 8.0;
        let x = (t - 0.5 * self.duration) / s;
        self.amplitude * (-x * x).exp()
    }

    /// Post-pulse window `10/kappa1 + 10/omega_M` (`omega_M = 1`).
    pub fn ring_down(kappa1: f64) -> f64 {
        if kappa1 > 0.0 {
            10.0 / kappa1 + 10.0
        } else {
            10.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::{integrate_adaptive, QuadratureOptions};

    #[test]
    fn pulse_is_normalized() {
        for &d in &[0.02, 0.2, 1.0] {
            let p = PulseShape::new(d).unwrap();
            let opts = QuadratureOptions { rel_tol: 1e-12, ..Default::default() };
            let norm = integrate_adaptive(|t| p.envelope(t).powi(2), &[0.0, p.duration() / 2.0, p.duration()], &opts)
                .unwrap();
            assert!((norm - 1.0).abs() < 1e-8, "d={d}: {norm}");
        }
    }

    #[test]
    fn pulse_edges_are_four_widths_out() {
        let p = PulseShape::new(0.2).unwrap();
        assert_eq!(p.duration(), 80.0);
        let edge = p.envelope(0.0) / p.peak();
        assert!((edge - (-16f64).exp()).abs() < 1e-20);
        assert_eq!(p.envelope(-1.0), 0.0);
        assert_eq!(p.envelope(80.5), 0.0);
        assert_eq!(p.envelope(40.0), p.peak());
    }

    #[test]
    fn rejects_bad_width() {
        assert!(PulseShape::new(0.0).is_err());
        assert!(PulseShape::new(f64::NAN).is_err());
    }
}
