use num_traits::Zero;

use super::{SystemParams, Truncation};
use crate::numerics::{Complex, ComplexMatrix, Real};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J / K.
pub const K_B: f64 = 1.380_649e-23;

/// Eigenenergy `n omega_c + m omega_M - n^2 g^2 / omega_M` of the decoupled
/// cavity with `n` photons and `m` displaced phonons.
pub fn polaron_energy<T: Real>(n: usize, m: usize, params: &SystemParams<T>) -> T {
    let nn = T::from_usize_lossy(n);
    nn * params.omega_c + T::from_usize_lossy(m) * params.omega_m - nn * nn * params.delta_om()
}

/// Bose occupation `1 / (exp(hbar omega / k_B T) - 1)` for an angular
/// frequency in rad/s and a temperature in kelvin.
pub fn thermal_nbar<T: Real>(omega_rad_per_s: T, temperature: T) -> T {
    if temperature <= T::zero() {
        return T::zero();
    }
    let x = T::lit(HBAR) * omega_rad_per_s / (T::lit(K_B) * temperature);
    T::one() / x.exp_m1()
}

/// Index map for an optical sector of dimension `optical_dim` tensored with
/// a phonon space; optical index is the slow one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectorMap {
    pub optical_dim: usize,
    pub phonon_dim: usize,
}

impl SectorMap {
    pub fn dim(&self) -> usize {
        self.optical_dim * self.phonon_dim
    }

    pub fn index(&self, optical: usize, phonon: usize) -> usize {
        debug_assert!(optical < self.optical_dim && phonon < self.phonon_dim);
        optical * self.phonon_dim + phonon
    }
}

/// Phonon ladder operator and the single-cavity `{|0>, |1>} x phonon` space.
#[derive(Clone, Debug)]
pub struct Operators<T> {
    /// Annihilation operator on the phonon space, `b[m-1, m] = sqrt(m)`.
    pub b: ComplexMatrix<T>,
    pub sectors: SectorMap,
}

pub fn build_operators<T: Real>(trunc: Truncation) -> Operators<T> {
    let m = trunc.phonon_dim();
    let b = ComplexMatrix::from_fn(m, m, |i, j| {
        if j == i + 1 {
            Complex::new(T::from_usize_lossy(j).sqrt(), T::zero())
        } else {
            Complex::zero()
        }
    });
    Operators { b, sectors: SectorMap { optical_dim: 2, phonon_dim: m } }
}

impl<T: Real> Operators<T> {
    /// `b^dag b` on the phonon space.
    pub fn number(&self) -> ComplexMatrix<T> {
        self.b.adjoint().matmul(&self.b)
    }

    /// `1_optical x b` on the full space.
    pub fn b_full(&self) -> ComplexMatrix<T> {
        ComplexMatrix::identity(self.sectors.optical_dim).kron(&self.b)
    }

    /// Cavity annihilation `|0><1| x 1_phonon` on the full space.
    pub fn c_full(&self) -> ComplexMatrix<T> {
        let mut c = ComplexMatrix::zeros(2, 2);
        c[(0, 1)] = Complex::new(T::one(), T::zero());
        c.kron(&ComplexMatrix::identity(self.sectors.phonon_dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energies() {
        let mut p = SystemParams::dimensionless(0.6f64, 0.2);
        p.omega_c = 50.0;
        assert_eq!(polaron_energy(0, 3, &p), 3.0);
        assert!((polaron_energy(1, 0, &p) - (50.0 - 0.36)).abs() < 1e-12);
        let free = SystemParams { omega_c: 50.0, ..SystemParams::dimensionless(0.0, 0.2) };
        assert_eq!(polaron_energy(1, 2, &free), 52.0);
    }

    #[test]
    fn bose_occupation() {
        assert_eq!(thermal_nbar(1e8, 0.0f64), 0.0);
        // hbar omega / k_B T = ln 2 gives exactly one quantum
        let t = 0.05f64;
        let w = std::f64::consts::LN_2 * K_B * t / HBAR;
        assert!((thermal_nbar(w, t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bose_occupation_at_200_mk() {
        // Direct evaluation with the CODATA constants:
        // 1 / expm1(hbar * 2 pi 1e8 / (k_B 0.2)) = 41.18..., and for 1e8 rad/s 261.3...
        let two_pi = thermal_nbar(2.0 * std::f64::consts::PI * 1e8, 0.2);
        let x = HBAR * 2.0 * std::f64::consts::PI * 1e8 / (K_B * 0.2);
        assert!((two_pi - 1.0 / (x.exp() - 1.0)).abs() < 1e-9);
        assert!((two_pi - 41.2).abs() < 0.05, "{two_pi}");
        let angular = thermal_nbar(1e8, 0.2f64);
        assert!((angular - 261.3).abs() < 0.1, "{angular}");
    }

    #[test]
    fn ladder_operators() {
        let ops = build_operators::<f64>(Truncation::new(6).unwrap());
        assert_eq!(ops.b[(0, 1)], Complex::new(1.0, 0.0));
        let n = ops.number();
        for k in 0..6 {
            assert!((n[(k, k)].re - k as f64).abs() < 1e-14);
        }
        let comm = ops.b.commutator(&ops.b.adjoint());
        for i in 0..6 {
            for j in 0..6 {
                let expect = match (i, j) {
                    (5, 5) => -5.0,
                    _ if i == j => 1.0,
                    _ => 0.0,
                };
                assert!((comm[(i, j)].re - expect).abs() < 1e-13 && comm[(i, j)].im == 0.0);
            }
        }
        let c = ops.c_full();
        assert_eq!(c.rows(), 12);
        assert_eq!(c[(ops.sectors.index(0, 3), ops.sectors.index(1, 3))], Complex::new(1.0, 0.0));
        assert!(ops.b_full().matmul(&c).commutator(&c).max_abs() < 1e-15);
    }
}
