//! Closed-form single-photon transmission through the side-coupled cavity,
//! transmitted spectra and sideband probabilities.

mod spectral;
mod spectrum;

use num_traits::Zero;
use thiserror::Error;

use crate::model::{franck_condon, ModelError, SystemParams, Truncation};
use crate::numerics::{Complex, NumericsError, Real};

pub use spectral::SpectralDensity;
pub use spectrum::{
    sideband_probabilities, sideband_probability, transmitted_spectrum, GridSpec, Spectrum,
};

/// Weight `1 - sum_m' FC(m0, m')^2` allowed outside the truncated sum.
pub const TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(
        "sum over intermediate phonon states not converged at M = {phonon_dim} \
         (missing weight {residual:e}); increase the phonon truncation"
    )]
    Unconverged { phonon_dim: usize, residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Franck–Condon table and couplings needed to evaluate `t_m` quickly for
/// many input detunings at fixed system parameters.
#[derive(Clone, Debug)]
pub struct Transport<T> {
    params: SystemParams<T>,
    m0: usize,
    dim: usize,
    /// `fc[m * dim + k] = <m| D(-g/omega_M) |k>`.
    fc: Vec<T>,
    residual: T,
}

impl<T: Real> Transport<T> {
    pub fn new(params: &SystemParams<T>, m0: usize, trunc: Truncation) -> Result<Self, TransportError> {
        params.validate()?;
        let dim = trunc.phonon_dim();
        if m0 >= dim {
            return Err(TransportError::InvalidInput(format!(
                "initial phonon number {m0} outside truncation M = {dim}"
            )));
        }
        let beta = params.beta(1);
        let mut fc = vec![T::zero(); dim * dim];
        for m in 0..dim {
            for k in 0..dim {
                fc[m * dim + k] = franck_condon(m, k, beta)?;
            }
        }
        let kept = (0..dim).fold(T::zero(), |acc, k| acc + fc[m0 * dim + k].powi(2));
        let residual = (T::one() - kept).max(T::zero());
        if residual > T::lit(TAIL_TOLERANCE) {
            return Err(TransportError::Unconverged { phonon_dim: dim, residual: residual.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { params: *params, m0, dim, fc, residual })
    }

    pub fn params(&self) -> &SystemParams<T> {
        &self.params
    }

    pub fn m0(&self) -> usize {
        self.m0
    }

    pub fn phonon_dim(&self) -> usize {
        self.dim
    }

    /// Writes `t_m` for `m = 0..M` at input detuning `delta0` into `out`.
    pub fn amplitudes_into(&self, delta0: T, out: &mut [Complex<T>]) {
        let p = &self.params;
        let n = self.dim;
        let half_width = (p.kappa1 + p.kappa0) * T::lit(0.5);
        let base = delta0 + T::from_usize_lossy(self.m0) * p.omega_m + p.delta_om();
        // a_k = FC(m0, k) / (delta0 - (k - m0) omega_M + delta_om + i (k1 + k0) / 2)
        let mut a = vec![Complex::<T>::zero(); n];
        for (k, ak) in a.iter_mut().enumerate() {
            let den = Complex::new(base - T::from_usize_lossy(k) * p.omega_m, half_width);
            *ak = den.inv() * self.fc[self.m0 * n + k];
        }
        let coupling = Complex::new(T::zero(), -p.kappa1);
        for (m, slot) in out.iter_mut().enumerate().take(n) {
            let row = &self.fc[m * n..(m + 1) * n];
            let s = row.iter().zip(&a).fold(Complex::zero(), |acc, (&f, &ak)| acc + ak * f);
            *slot = coupling * s;
            if m == self.m0 {
                *slot += Complex::new(T::one(), T::zero());
            }
        }
    }

    pub fn amplitudes(&self, delta0: T) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.dim];
        self.amplitudes_into(delta0, &mut out);
        out
    }

    /// `|t_m|^2` for all `m`.
    pub fn probabilities_into(&self, delta0: T, out: &mut [T]) {
        let mut amps = vec![Complex::zero(); self.dim];
        self.amplitudes_into(delta0, &mut amps);
        for (o, a) in out.iter_mut().zip(&amps) {
            *o = a.norm_sqr();
        }
    }

    pub fn transmission_set(&self, delta0: T) -> TransmissionSet<T> {
        TransmissionSet {
            m0: self.m0,
            delta0,
            amplitudes: self.amplitudes(delta0),
            cutoff: self.dim,
            residual: self.residual,
        }
    }

    /// Input detunings at which the photon is resonant with a transition
    /// `m0 -> m'` of the displaced oscillator.
    pub fn resonances(&self) -> Vec<T> {
        dip_positions(&self.params, self.m0, self.dim)
    }
}

/// Sideband amplitudes `t_m` at one input detuning.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionSet<T> {
    pub m0: usize,
    pub delta0: T,
    /// `t_m` for `m = 0..cutoff`.
    pub amplitudes: Vec<Complex<T>>,
    /// Number of intermediate states `m'` in the sum.
    pub cutoff: usize,
    /// Displaced-state weight of `|m0>` left outside the sum.
    pub residual: T,
}

impl<T: Real> TransmissionSet<T> {
    /// `sum_m |t_m|^2`.
    pub fn flux(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }
}

pub fn transmission_amplitudes<T: Real>(
    params: &SystemParams<T>,
    delta0: T,
    m0: usize,
    trunc: Truncation,
) -> Result<TransmissionSet<T>, TransportError> {
    Ok(Transport::new(params, m0, trunc)?.transmission_set(delta0))
}

/// `-delta_om + (m' - m0) omega_M` for `m' = 0..count`.
pub fn dip_positions<T: Real>(params: &SystemParams<T>, m0: usize, count: usize) -> Vec<T> {
    (0..count)
        .map(|k| (T::from_usize_lossy(k) - T::from_usize_lossy(m0)) * params.omega_m - params.delta_om())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::displacement_matrix;
    use proptest::prelude::*;

    fn trunc(m: usize) -> Truncation {
        Truncation::new(m).unwrap()
    }

    #[test]
    fn decoupled_cavity_is_an_all_pass_filter() {
        let p = SystemParams::dimensionless(0.0f64, 0.3);
        for &d0 in &[-1.0, -0.1, 0.0, 0.4] {
            let set = transmission_amplitudes(&p, d0, 1, trunc(16)).unwrap();
            let expect = Complex::new(d0, -0.15) / Complex::new(d0, 0.15);
            assert!((set.amplitudes[1] - expect).norm() < 1e-14);
            assert!((set.amplitudes[1].norm() - 1.0).abs() < 1e-14);
            assert!(set.amplitudes.iter().enumerate().all(|(m, a)| m == 1 || a.norm() == 0.0));
        }
    }

    #[test]
    fn no_coupling_means_full_transmission() {
        let p = SystemParams::dimensionless(0.9f64, 0.0);
        let set = transmission_amplitudes(&p, 0.3, 0, trunc(20)).unwrap();
        assert_eq!(set.amplitudes[0], Complex::new(1.0, 0.0));
        assert!(set.amplitudes[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn carrier_dip_against_direct_sum() {
        // Independent evaluation with a dense 80-level displacement matrix
        // (scipy expm): |t_0|^2 = 0.16343647276726792 at g = 0.6, kappa1 = 0.2,
        // delta0 = -delta_om; resonances one omega_M away give 0.9976 and 0.2498.
        let p = SystemParams::dimensionless(0.6f64, 0.2);
        let tr = Transport::new(&p, 0, trunc(30)).unwrap();
        let t0 = |d: f64| tr.amplitudes(d)[0].norm_sqr();
        assert!((t0(-0.36) - 0.163_436_472_767_267_92).abs() < 1e-12);
        for d in tr.resonances().into_iter().skip(1).take(4).chain([-1.36]) {
            assert!(t0(d) > t0(-0.36), "delta0 = {d}");
        }
        // same number through the matrix-exponential route
        let dm = displacement_matrix(-0.6f64, trunc(60)).unwrap().matrix;
        let mut t = Complex::new(1.0, 0.0);
        for k in 0..60 {
            let den = Complex::new(-0.36 - k as f64 + 0.36, 0.1);
            t += Complex::new(0.0, -0.2) * dm[(0, k)] * dm[(0, k)] / den;
        }
        assert!((t.norm_sqr() - t0(-0.36)).abs() < 1e-12);
    }

    #[test]
    fn dips_follow_the_polaron_shift() {
        let p = SystemParams::dimensionless(0.6f64, 0.2);
        assert!((dip_positions(&p, 0, 1)[0] + 0.36).abs() < 1e-15);
        let p = SystemParams::dimensionless(1.4f64, 0.2);
        assert!((dip_positions(&p, 0, 1)[0] + 1.96).abs() < 1e-14);
        let p = SystemParams::dimensionless(0.0f64, 0.2);
        assert_eq!(dip_positions(&p, 2, 4), vec![-2.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn truncation_too_small_is_reported() {
        let p = SystemParams::dimensionless(2.0f64, 0.2);
        let err = Transport::new(&p, 0, trunc(8)).unwrap_err();
        assert!(matches!(err, TransportError::Unconverged { phonon_dim: 8, .. }));
    }

    #[test]
    fn loss_reduces_flux_monotonically() {
        // Below critical coupling only: for kappa0 >> kappa1 the cavity
        // decouples and transmission climbs back towards one.
        let mut last = 1.0;
        for &k0 in &[0.01f64, 0.03, 0.1, 0.2, 0.35] {
            let p = SystemParams::dimensionless(0.7, 0.4).with_kappa0(k0);
            let f = transmission_amplitudes(&p, -0.49, 0, trunc(24)).unwrap().flux();
            assert!(f < last, "kappa0 = {k0}: {f} !< {last}");
            last = f;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn lossless_flux_is_conserved(
            g in 0.0f64..2.0,
            k1 in 0.05f64..1.0,
            d0 in -3.0f64..3.0,
            m0 in 0usize..3,
        ) {
            let p = SystemParams::dimensionless(g, k1);
            let t = Truncation::for_transport(g, m0, d0);
            let set = transmission_amplitudes(&p, d0, m0, t).unwrap();
            prop_assert!((set.flux() - 1.0).abs() < 1e-6, "flux {}", set.flux());
        }

        #[test]
        fn sideband_weights_do_not_depend_on_displacement_sign(
            g in 0.0f64..2.0,
            k1 in 0.05f64..1.0,
            d0 in -3.0f64..3.0,
            m0 in 0usize..3,
        ) {
            let t = Truncation::for_transport(g, m0, d0);
            let a = transmission_amplitudes(&SystemParams::dimensionless(g, k1), d0, m0, t).unwrap();
            let b = transmission_amplitudes(&SystemParams::dimensionless(-g, k1), d0, m0, t).unwrap();
            for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
                prop_assert!((x.norm() - y.norm()).abs() < 1e-12);
            }
        }
    }
}
