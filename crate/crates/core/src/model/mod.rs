//! Optomechanical system description: parameters, phonon truncation,
//! operators and the displaced number states that diagonalize the
//! one-photon Hamiltonian.

mod operators;
mod overlap;

use thiserror::Error;

use crate::numerics::{NumericsError, Real};

pub use operators::{build_operators, polaron_energy, thermal_nbar, Operators, SectorMap};
pub use overlap::{displacement_matrix, franck_condon, DisplacedState, DisplacementMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("Franck-Condon factor <{m}|D({beta})|{n}> overflows the scalar type")]
    Overflow { m: usize, n: usize, beta: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Physical rates and frequencies of one optomechanical cavity.
///
/// All quantities share one unit. The rest of the crate works in units of
/// the mechanical frequency; use [`SystemParams::scaled`] to get there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams<T> {
    pub omega_c: T,
    pub omega_m: T,
    pub g: T,
    /// Cavity-waveguide coupling rate.
    pub kappa1: T,
    /// Intrinsic cavity loss.
    pub kappa0: T,
    pub gamma_m: T,
    pub n_th: T,
}

impl<T: Real> SystemParams<T> {
    /// Parameters in mechanical units (`omega_M = 1`, `omega_c = 0`), no loss
    /// and no mechanical bath.
    pub fn dimensionless(g: T, kappa1: T) -> Self {
        Self {
            omega_c: T::zero(),
            omega_m: T::one(),
            g,
            kappa1,
            kappa0: T::zero(),
            gamma_m: T::zero(),
            n_th: T::zero(),
        }
    }

    pub fn with_kappa0(mut self, kappa0: T) -> Self {
        self.kappa0 = kappa0;
        self
    }

    pub fn with_bath(mut self, gamma_m: T, n_th: T) -> Self {
        self.gamma_m = gamma_m;
        self.n_th = n_th;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let check = |name: &'static str, v: T, ok: bool, reason: &'static str| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter { name, value: v.to_f64().unwrap_or(f64::NAN), reason })
            }
        };
        check("omega_M", self.omega_m, self.omega_m > T::zero(), "must be positive")?;
        check("omega_c", self.omega_c, true, "must be finite")?;
        check("g", self.g, true, "must be finite")?;
        check("kappa1", self.kappa1, self.kappa1 >= T::zero(), "must be non-negative")?;
        check("kappa0", self.kappa0, self.kappa0 >= T::zero(), "must be non-negative")?;
        check("gamma_M", self.gamma_m, self.gamma_m >= T::zero(), "must be non-negative")?;
        check("n_th", self.n_th, self.n_th >= T::zero(), "must be non-negative")
    }

    /// Polaron shift `g^2 / omega_M`.
    pub fn delta_om(&self) -> T {
        self.g * self.g / self.omega_m
    }

    /// Thermal heating rate `n_th * gamma_M`.
    pub fn heating_rate(&self) -> T {
        self.n_th * self.gamma_m
    }

    /// Displacement of the `n`-photon mechanical eigenstates, `-n g / omega_M`.
    pub fn beta(&self, n: usize) -> T {
        -T::from_usize_lossy(n) * self.g / self.omega_m
    }

    /// Same system with every frequency divided by `omega_M`.
    pub fn scaled(&self) -> Self {
        let w = self.omega_m;
        Self {
            omega_c: self.omega_c / w,
            omega_m: T::one(),
            g: self.g / w,
            kappa1: self.kappa1 / w,
            kappa0: self.kappa0 / w,
            gamma_m: self.gamma_m / w,
            n_th: self.n_th,
        }
    }
}

/// Phonon Fock space `|0>..|M-1>` per mechanical mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    phonon_dim: usize,
}

impl Truncation {
    pub fn new(phonon_dim: usize) -> Result<Self, ModelError> {
        if phonon_dim < 2 {
            return Err(ModelError::InvalidParameter {
                name: "phonon_dim",
                value: phonon_dim as f64,
                reason: "needs at least two phonon levels",
            });
        }
        Ok(Self { phonon_dim })
    }

    /// `max(16, ceil(4 (g/omega_M)^2 + n_target + 12))`.
    pub fn for_coupling(g_over_wm: f64, n_target: usize) -> Self {
        let m = (4.0 * g_over_wm * g_over_wm + n_target as f64 + 12.0).ceil() as usize;
        Self { phonon_dim: m.max(16) }
    }

    /// [`Truncation::for_coupling`] with room for the highest intermediate
    /// state `m'` that an input at `delta0` can reach resonantly from `m0`.
    pub fn for_transport(g_over_wm: f64, m0: usize, delta0_over_wm: f64) -> Self {
        let reach = (delta0_over_wm + g_over_wm * g_over_wm).max(0.0).ceil() as usize;
        Self::for_coupling(g_over_wm, m0 + reach)
    }

    pub fn phonon_dim(&self) -> usize {
        self.phonon_dim
    }

    pub fn grown(&self, by: usize) -> Self {
        Self { phonon_dim: self.phonon_dim + by }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub phonon_dim: usize,
    /// Largest change of any observable under the last `M -> M + 4` step.
    pub drift: f64,
    pub converged: bool,
}

/// Grows the truncation in steps of 4 until every observable moves by less
/// than `tol`, or `max_dim` is reached. Returns the observables at the larger
/// of the last two truncations.
pub fn converge_truncation<E>(
    start: Truncation,
    tol: f64,
    max_dim: usize,
    mut observe: impl FnMut(Truncation) -> Result<Vec<f64>, E>,
) -> Result<(Vec<f64>, ConvergenceReport), E> {
    let mut trunc = start;
    let mut prev = observe(trunc)?;
    loop {
        let next_trunc = trunc.grown(4);
        let next = observe(next_trunc)?;
        let drift = prev
            .iter()
            .zip(&next)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
            .max(if prev.len() == next.len() { 0.0 } else { f64::INFINITY });
        let converged = drift < tol;
        if converged || next_trunc.phonon_dim() + 4 > max_dim {
            let report = ConvergenceReport { phonon_dim: next_trunc.phonon_dim(), drift, converged };
            return Ok((next, report));
        }
        trunc = next_trunc;
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = SystemParams::dimensionless(0.6f64, 0.2).with_bath(1e-5, 3.0);
        assert!((p.delta_om() - 0.36).abs() < 1e-15);
        assert!((p.heating_rate() - 3e-5).abs() < 1e-18);
        assert_eq!(p.beta(1), -0.6);
        p.validate().unwrap();
    }

    #[test]
    fn scaling_to_mechanical_units() {
        let p = SystemParams {
            omega_c: 0.0f64,
            omega_m: 100.0,
            g: 70.0,
            kappa1: 60.0,
            kappa0: 0.0,
            gamma_m: 1e-3,
            n_th: 41.2,
        };
        let s = p.scaled();
        assert_eq!((s.omega_m, s.g, s.kappa1), (1.0, 0.7, 0.6));
        assert!((s.delta_om() - p.delta_om() / 100.0).abs() < 1e-15);
    }

    #[test]
    fn validation_names_the_parameter() {
        let err = SystemParams::dimensionless(0.5, -1.0).validate().unwrap_err();
        assert!(err.to_string().contains("kappa1"));
        let mut p = SystemParams::dimensionless(0.5, 1.0);
        p.omega_m = 0.0;
        assert!(p.validate().unwrap_err().to_string().contains("omega_M"));
        assert!(SystemParams::dimensionless(f64::NAN, 1.0).validate().is_err());
    }

    #[test]
    fn default_truncation_rule() {
        assert_eq!(Truncation::for_coupling(0.0, 1).phonon_dim(), 16);
        assert_eq!(Truncation::for_coupling(1.4, 5).phonon_dim(), 25);
        assert!(Truncation::new(1).is_err());
    }

    #[test]
    fn convergence_loop_stops_on_small_drift() {
        let (obs, rep) = converge_truncation::<()>(Truncation::new(4).unwrap(), 1e-4, 100, |t| {
            Ok(vec![1.0 - (-(t.phonon_dim() as f64)).exp()])
        })
        .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.phonon_dim, 16);
        assert!((obs[0] - 1.0).abs() < 1e-4);
        let (_, rep) = converge_truncation::<()>(Truncation::new(4).unwrap(), 1e-4, 20, |t| {
            Ok(vec![t.phonon_dim() as f64])
        })
        .unwrap();
        assert!(!rep.converged);
    }
}
