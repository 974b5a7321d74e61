use super::{hermitian_eig, Complex, ComplexMatrix, NumericsError, Real};

/// Eigenvalues in `[-CLAMP, 0)` are rounding noise and are set to zero.
const CLAMP: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;

fn validate_density<T: Real>(rho: &ComplexMatrix<T>, name: &str) -> Result<(), NumericsError> {
    if !rho.is_square() {
        return Err(NumericsError::DimensionMismatch(format!("{name} is not square")));
    }
    let tr = rho.trace();
    let tol = T::lit(TRACE_TOL).max(T::lit(100.0) * T::epsilon());
    if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
        return Err(NumericsError::InvalidDensity(format!(
            "{name} has trace {:e}{:+e}i",
            super::to_f64(tr.re),
            super::to_f64(tr.im)
        )));
    }
    Ok(())
}

/// Square root of a PSD Hermitian matrix through its eigendecomposition.
fn psd_sqrt<T: Real>(m: &ComplexMatrix<T>, name: &str) -> Result<ComplexMatrix<T>, NumericsError> {
    let eig = hermitian_eig(m)?;
    let clamp = T::lit(CLAMP).max(T::lit(100.0) * T::epsilon());
    if let Some(&low) = eig.values.first() {
        if low < -clamp {
            return Err(NumericsError::InvalidDensity(format!(
                "{name} has negative eigenvalue {:e}",
                super::to_f64(low)
            )));
        }
    }
    Ok(eig.map_values(|x| x.max(T::zero()).sqrt()))
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn uhlmann_fidelity<T: Real>(
    rho: &ComplexMatrix<T>,
    sigma: &ComplexMatrix<T>,
) -> Result<T, NumericsError> {
    validate_density(rho, "rho")?;
    validate_density(sigma, "sigma")?;
    if rho.rows() != sigma.rows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "rho is {}-dimensional, sigma is {}-dimensional",
            rho.rows(),
            sigma.rows()
        )));
    }
    let s = psd_sqrt(rho, "rho")?;
    // also validates sigma's spectrum
    psd_sqrt(sigma, "sigma")?;
    let inner = s.matmul(sigma).matmul(&s);
    let n = inner.rows();
    let half = T::lit(0.5);
    let inner = ComplexMatrix::from_fn(n, n, |i, j| (inner[(i, j)] + inner[(j, i)].conj()) * half);
    let eig = hermitian_eig(&inner)?;
    // Eigenvalues at rounding level would add spurious sqrt(eps)-sized terms
    // (a rank-deficient argument leaves many of them).
    let top = eig.values.last().copied().unwrap_or(T::zero()).max(T::zero());
    let floor = T::lit(64.0) * T::epsilon() * top.max(T::one());
    let root_trace = eig
        .values
        .iter()
        .fold(T::zero(), |acc, &x| if x > floor { acc + x.sqrt() } else { acc });
    Ok((root_trace * root_trace).min(T::one()).max(T::zero()))
}

/// Fidelity against a pure state, `<psi|rho|psi>` with `psi` normalized here.
pub fn fidelity_with_pure<T: Real>(
    rho: &ComplexMatrix<T>,
    psi: &[Complex<T>],
) -> Result<T, NumericsError> {
    validate_density(rho, "rho")?;
    if psi.len() != rho.rows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "state has {} amplitudes, rho is {}-dimensional",
            psi.len(),
            rho.rows()
        )));
    }
    let norm2 = psi.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    if norm2.is_zero() {
        return Err(NumericsError::Domain("zero state vector".into()));
    }
    Ok((rho.sandwich(psi, psi).re / norm2).min(T::one()).max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use rand::{Rng, SeedableRng};

    type M = ComplexMatrix<f64>;

    fn basis(n: usize, k: usize) -> Vec<Complex<f64>> {
        let mut v = vec![Complex::zero(); n];
        v[k] = Complex::one();
        v
    }

    fn random_density(rng: &mut impl Rng, n: usize) -> M {
        let x = M::from_fn(n, n, |_, _| {
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let p = x.matmul(&x.adjoint());
        let tr = p.trace().re;
        p.scale_real(1.0 / tr)
    }

    #[test]
    fn self_fidelity_is_one() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let rho = random_density(&mut rng, 6);
        assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_pure_states() {
        let a = M::outer(&basis(2, 0), &basis(2, 0));
        let b = M::outer(&basis(2, 1), &basis(2, 1));
        assert!(uhlmann_fidelity(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_qubit_against_ground() {
        let rho = M::identity(2).scale_real(0.5);
        let sigma = M::outer(&basis(2, 0), &basis(2, 0));
        assert!((uhlmann_fidelity(&rho, &sigma).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity_with_pure(&rho, &basis(2, 0)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pure_fast_path_matches_general_route() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let rho = random_density(&mut rng, 5);
        let psi: Vec<_> = (0..5)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<_> = psi.iter().map(|z| z / norm).collect();
        let sigma = M::outer(&psi, &psi);
        let general = uhlmann_fidelity(&rho, &sigma).unwrap();
        let fast = fidelity_with_pure(&rho, &psi).unwrap();
        assert!((general - fast).abs() < 1e-9, "{general} vs {fast}");
    }

    #[test]
    fn symmetric_in_arguments() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        for _ in 0..10 {
            let a = random_density(&mut rng, 8);
            let b = random_density(&mut rng, 8);
            let f1 = uhlmann_fidelity(&a, &b).unwrap();
            let f2 = uhlmann_fidelity(&b, &a).unwrap();
            assert!((f1 - f2).abs() < 1e-10, "{f1} vs {f2}");
        }
    }

    #[test]
    fn rejects_bad_trace_and_negative_spectrum() {
        let a = M::identity(2);
        let b = M::identity(2).scale_real(0.5);
        assert!(matches!(uhlmann_fidelity(&a, &b), Err(NumericsError::InvalidDensity(_))));
        let neg = M::from_real_diagonal(&[1.5, -0.5]);
        assert!(matches!(uhlmann_fidelity(&neg, &b), Err(NumericsError::InvalidDensity(_))));
    }
}
