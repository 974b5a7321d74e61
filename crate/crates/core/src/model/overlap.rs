use num_traits::Zero;

use super::{ModelError, SystemParams, Truncation};
use crate::numerics::{assoc_laguerre, matrix_exp, Complex, ComplexMatrix, Real};

/// Largest phonon index accepted by [`franck_condon`].
pub const MAX_FC_INDEX: usize = 200;
/// Largest `|beta|` accepted by [`franck_condon`].
pub const MAX_FC_BETA: f64 = 10.0;

fn ln_factorial<T: Real>(n: usize) -> T {
    (2..=n).fold(T::zero(), |acc, k| acc + T::from_usize_lossy(k).ln())
}

/// `<m| D(beta) |n>` with `D(beta) = exp[beta (b^dag - b)]`.
///
/// Uses the Laguerre closed form with the factorial ratio and power of
/// `beta` combined in log space, so large indices neither overflow nor
/// underflow before the final product.
pub fn franck_condon<T: Real>(m: usize, n: usize, beta: T) -> Result<T, ModelError> {
    if m >= MAX_FC_INDEX || n >= MAX_FC_INDEX {
        return Err(ModelError::InvalidParameter {
            name: "phonon index",
            value: m.max(n) as f64,
            reason: "Franck-Condon indices must be below 200",
        });
    }
    if !beta.is_finite() || beta.abs() > T::lit(MAX_FC_BETA) {
        return Err(ModelError::InvalidParameter {
            name: "beta",
            value: beta.to_f64().unwrap_or(f64::NAN),
            reason: "displacement must satisfy |beta| <= 10",
        });
    }
    if beta.is_zero() {
        return Ok(if m == n { T::one() } else { T::zero() });
    }
    // mirrored branch: <m|D(b)|n> = <n|D(-b)|m>
    let (hi, lo, b) = if m >= n { (m, n, beta) } else { (n, m, -beta) };
    let x = beta * beta;
    let lag = assoc_laguerre(lo, hi - lo, x)?;
    if lag.is_zero() {
        return Ok(T::zero());
    }
    let k = hi - lo;
    let half = T::lit(0.5);
    let log_mag = half * (ln_factorial::<T>(lo) - ln_factorial::<T>(hi))
        + T::from_usize_lossy(k) * b.abs().ln()
        - half * x
        + lag.abs().ln();
    if log_mag > T::max_value().ln() {
        return Err(ModelError::Overflow { m, n, beta: beta.to_f64().unwrap_or(f64::NAN) });
    }
    let negative = (b < T::zero() && k % 2 == 1) != (lag < T::zero());
    let mag = log_mag.exp();
    Ok(if negative { -mag } else { mag })
}

/// Truncated displacement operator and how much of it leaks to the edge.
#[derive(Clone, Debug)]
pub struct DisplacementMatrix<T> {
    pub matrix: ComplexMatrix<T>,
    /// Largest `|D[M-1, n]|^2` over the lower half of the columns. Above
    /// `1e-8` the truncation is too small for `beta`.
    pub edge_mass: T,
}

impl<T: Real> DisplacementMatrix<T> {
    pub fn truncation_ok(&self) -> bool {
        self.edge_mass <= T::lit(1e-8)
    }
}

/// `exp[beta (b^dag - b)]` on the truncated phonon space.
pub fn displacement_matrix<T: Real>(beta: T, trunc: Truncation) -> Result<DisplacementMatrix<T>, ModelError> {
    let dim = trunc.phonon_dim();
    let gen = ComplexMatrix::from_fn(dim, dim, |i, j| {
        if i == j + 1 {
            Complex::new(beta * T::from_usize_lossy(i).sqrt(), T::zero())
        } else if j == i + 1 {
            Complex::new(-beta * T::from_usize_lossy(j).sqrt(), T::zero())
        } else {
            Complex::zero()
        }
    });
    let matrix = matrix_exp(&gen)?;
    let edge_mass = (0..dim.div_ceil(2)).fold(T::zero(), |acc, n| acc.max(matrix[(dim - 1, n)].norm_sqr()));
    Ok(DisplacementMatrix { matrix, edge_mass })
}

/// `D(-n g / omega_M) |m>`: the mechanical eigenstate with `n` photons in the
/// cavity and `m` phonons above the displaced ground state.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacedState<T> {
    pub photon_number: usize,
    pub phonon_index: usize,
    pub beta: T,
    /// Amplitudes on the bare Fock basis `|0>..|M-1>`.
    pub amplitudes: Vec<T>,
}

impl<T: Real> DisplacedState<T> {
    pub fn new(
        params: &SystemParams<T>,
        photon_number: usize,
        phonon_index: usize,
        trunc: Truncation,
    ) -> Result<Self, ModelError> {
        let beta = params.beta(photon_number);
        let amplitudes = (0..trunc.phonon_dim())
            .map(|k| franck_condon(k, phonon_index, beta))
            .collect::<Result<_, _>>()?;
        Ok(Self { photon_number, phonon_index, beta, amplitudes })
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, &a| acc + a * a).sqrt()
    }

    pub fn to_complex(&self) -> Vec<Complex<T>> {
        self.amplitudes.iter().map(|&a| Complex::new(a, T::zero())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vacuum_overlap() {
        let v = franck_condon(0, 0, 0.6f64).unwrap();
        assert!((v - (-0.18f64).exp()).abs() < 1e-15);
        assert!((v - 0.835_270).abs() < 1e-6);
    }

    #[test]
    fn zero_displacement_is_identity() {
        for m in 0..6 {
            for n in 0..6 {
                let expect = if m == n { 1.0 } else { 0.0 };
                assert_eq!(franck_condon(m, n, 0.0f64).unwrap(), expect);
            }
        }
    }

    #[test]
    fn first_excited_overlap_against_matrix_exponential() {
        // Oracle: element (1,0) of exp[0.6 (b^dag - b)] truncated at 60 levels.
        let d = displacement_matrix(0.6f64, Truncation::new(60).unwrap()).unwrap();
        let oracle = d.matrix[(1, 0)].re;
        assert!((oracle - 0.501_162).abs() < 1e-6, "oracle {oracle}");
        assert!((franck_condon(1, 0, 0.6f64).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn displacement_matrix_basics() {
        let id = displacement_matrix(0.0f64, Truncation::new(5).unwrap()).unwrap();
        assert_eq!(id.matrix, ComplexMatrix::identity(5));
        let d = displacement_matrix(1.0f64, Truncation::new(40).unwrap()).unwrap();
        assert!((d.matrix[(0, 0)].re - (-0.5f64).exp()).abs() < 1e-9);
        assert!(d.truncation_ok());
        let d = displacement_matrix(0.7f64, Truncation::new(40).unwrap()).unwrap();
        for m in 0..40 {
            let fc = franck_condon(m, 0, 0.7f64).unwrap();
            assert!((d.matrix[(m, 0)].re - fc).abs() < 1e-9, "m={m}");
        }
        let small = displacement_matrix(3.0f64, Truncation::new(8).unwrap()).unwrap();
        assert!(!small.truncation_ok());
    }

    #[test]
    fn closed_form_matches_matrix_exponential() {
        let trunc = Truncation::new(90).unwrap();
        for &beta in &[-2.5f64, -1.3, -0.4, 0.25, 1.0, 1.9, 2.5] {
            let d = displacement_matrix(beta, trunc).unwrap();
            let mut worst = 0.0f64;
            for m in 0..=20 {
                for n in 0..=20 {
                    let fc = franck_condon(m, n, beta).unwrap();
                    worst = worst.max((fc - d.matrix[(m, n)].re).abs()).max(d.matrix[(m, n)].im.abs());
                }
            }
            assert!(worst < 1e-9, "beta={beta}: {worst}");
        }
    }

    #[test]
    fn large_indices_stay_finite() {
        let v = franck_condon(199, 199, 10.0f64).unwrap();
        assert!(v.is_finite() && v.abs() <= 1.0);
        let v = franck_condon(150, 3, -9.5f64).unwrap();
        assert!(v.is_finite() && v.abs() <= 1.0);
        assert!(franck_condon(200, 0, 1.0f64).is_err());
        assert!(franck_condon(0, 0, 10.5f64).is_err());
    }

    #[test]
    fn displaced_state_is_an_eigenvector() {
        // (b^dag b + g (b + b^dag)) D(-g)|m> = (m - g^2) D(-g)|m>
        let g = 0.8f64;
        let trunc = Truncation::new(48).unwrap();
        let params = SystemParams::dimensionless(g, 0.2);
        let dim = trunc.phonon_dim();
        for m in 0..=dim / 2 {
            let s = DisplacedState::new(&params, 1, m, trunc).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-8);
            let a = &s.amplitudes;
            for k in 0..dim - 1 {
                let mut hv = k as f64 * a[k];
                if k + 1 < dim {
                    hv += g * (k as f64 + 1.0).sqrt() * a[k + 1];
                }
                if k > 0 {
                    hv += g * (k as f64).sqrt() * a[k - 1];
                }
                let resid = hv - (m as f64 - params.delta_om()) * a[k];
                assert!(resid.abs() < 1e-6, "m={m} k={k}: {resid}");
            }
        }
    }

    #[test]
    fn single_precision_overlap() {
        let a = franck_condon(3, 1, 0.9f32).unwrap() as f64;
        let b = franck_condon(3, 1, 0.9f64).unwrap();
        assert!((a - b).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn completeness(n in 0usize..=10, beta in -2.0f64..2.0) {
            let total: f64 = (0..80).map(|m| franck_condon(m, n, beta).unwrap().powi(2)).sum();
            prop_assert!((total - 1.0).abs() < 1e-8);
        }

        #[test]
        fn exchange_symmetry(m in 0usize..40, n in 0usize..40, beta in -4.0f64..4.0) {
            let a = franck_condon(m, n, beta).unwrap();
            let b = franck_condon(n, m, beta).unwrap();
            let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((a - sign * b).abs() < 1e-12);
        }
    }
}
