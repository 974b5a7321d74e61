//! Dense single-cavity Hamiltonian and Lindblad generator on the
//! `{|0>, |1>} x phonon` space. The block engine never forms these; they
//! serve as a reference and for small studies.

use num_traits::Zero;

use super::DynamicsError;
use crate::model::{build_operators, SystemParams, Truncation};
use crate::{CMatrix, C64};

/// `H = -delta0 c^dag c + omega_M b^dag b + g c^dag c (b + b^dag)` in the
/// frame rotating at the input carrier.
pub fn build_hamiltonian(params: &SystemParams<f64>, delta0: f64, trunc: Truncation) -> CMatrix {
    let ops = build_operators::<f64>(trunc);
    let c = ops.c_full();
    let b = ops.b_full();
    let nc = c.adjoint().matmul(&c);
    let nb = b.adjoint().matmul(&b);
    let x = &b + &b.adjoint();
    let h = &(&nc.scale_real(-delta0) + &nb.scale_real(params.omega_m)) + &nc.matmul(&x).scale_real(params.g);
    // products of real matrices: exact, but symmetrize against any stray rounding
    CMatrix::from_fn(h.rows(), h.cols(), |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5)
}

/// `rho -> -i[H, rho] + (kappa1 + kappa0) D[c] rho + gamma (n_th + 1) D[b] rho
/// + gamma n_th D[b^dag] rho`.
#[derive(Clone, Debug)]
pub struct LindbladSuperop {
    h: CMatrix,
    jumps: Vec<(f64, CMatrix)>,
}

pub fn lindblad_superop(params: &SystemParams<f64>, h: &CMatrix) -> Result<LindbladSuperop, DynamicsError> {
    if !h.is_square() || h.rows() % 2 != 0 || h.rows() < 4 {
        return Err(DynamicsError::InvalidInput(format!(
            "Hamiltonian must act on {{|0>,|1>}} x phonon space, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let trunc = Truncation::new(h.rows() / 2)?;
    let ops = build_operators::<f64>(trunc);
    let c = ops.c_full();
    let b = ops.b_full();
    let jumps = vec![
        (params.kappa1 + params.kappa0, c),
        (params.gamma_m * (params.n_th + 1.0), b.clone()),
        (params.gamma_m * params.n_th, b.adjoint()),
    ]
    .into_iter()
    .filter(|(rate, _)| *rate != 0.0)
    .collect();
    Ok(LindbladSuperop { h: h.clone(), jumps })
}

impl LindbladSuperop {
    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mi = C64::new(0.0, -1.0);
        let mut out = self.h.commutator(rho).scale(mi);
        for (rate, l) in &self.jumps {
            let ld = l.adjoint();
            let ll = ld.matmul(l);
            let jump = l.matmul(rho).matmul(&ld);
            let anti = &ll.matmul(rho) + &rho.matmul(&ll);
            out += &(&jump - &anti.scale_real(0.5)).scale_real(*rate);
        }
        out
    }

    /// Dense `dim^2 x dim^2` matrix of the map acting on row-major `vec(rho)`.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n * n, n * n);
        for k in 0..n * n {
            let mut e = CMatrix::zeros(n, n);
            e[(k / n, k % n)] = C64::new(1.0, 0.0);
            let col = self.apply(&e);
            for (r, v) in col.as_slice().iter().enumerate() {
                if !v.is_zero() {
                    out[(r, k)] = *v;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eig;
    use rand::{Rng, SeedableRng};

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
        let x = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&x + &x.adjoint()).scale_real(0.5)
    }

    #[test]
    fn decoupled_hamiltonian_is_two_ladders() {
        let p = SystemParams::dimensionless(0.0, 0.2);
        let h = build_hamiltonian(&p, 0.0, Truncation::new(5).unwrap());
        assert_eq!(h.hermitian_deviation(), 0.0);
        for k in 0..10 {
            for j in 0..10 {
                let want = if k == j { (k % 5) as f64 } else { 0.0 };
                assert!((h[(k, j)] - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn one_photon_levels_are_polaron_shifted() {
        let (g, delta0) = (0.6, -0.2);
        let p = SystemParams::dimensionless(g, 0.2);
        let m = 40;
        let h = build_hamiltonian(&p, delta0, Truncation::new(m).unwrap());
        let block = CMatrix::from_fn(m, m, |i, j| h[(m + i, m + j)]);
        let eig = hermitian_eig(&block).unwrap();
        for k in 0..=m / 2 {
            let want = -delta0 + k as f64 - g * g;
            assert!((eig.values[k] - want).abs() < 1e-6, "level {k}: {} vs {want}", eig.values[k]);
        }
    }

    #[test]
    fn generator_preserves_trace() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        let p = SystemParams::dimensionless(0.8, 0.3).with_kappa0(0.1).with_bath(0.05, 2.0);
        let h = build_hamiltonian(&p, -0.64, Truncation::new(6).unwrap());
        let l = lindblad_superop(&p, &h).unwrap();
        for _ in 0..5 {
            let rho = random_hermitian(&mut rng, 12);
            assert!(l.apply(&rho).trace().norm() < 1e-12);
        }
    }

    #[test]
    fn zero_generator() {
        let p = SystemParams::dimensionless(0.0, 0.0);
        let h = CMatrix::zeros(8, 8);
        let l = lindblad_superop(&p, &h).unwrap();
        let rho = CMatrix::identity(8).scale_real(0.125);
        assert_eq!(l.apply(&rho).max_abs(), 0.0);
    }

    #[test]
    fn thermal_relaxation_reaches_bath_occupation() {
        // Steady state of the thermal dissipators is the (truncated) thermal
        // state; its occupation is n_th up to the truncation tail.
        let nth = 0.5;
        let m = 30;
        let p = SystemParams::dimensionless(0.0, 0.0).with_bath(1.0, nth);
        let h = build_hamiltonian(&p, 0.0, Truncation::new(m).unwrap());
        let l = lindblad_superop(&p, &h).unwrap();
        let q: f64 = nth / (nth + 1.0);
        let z: f64 = (0..m).map(|k| q.powi(k as i32)).sum();
        let thermal = CMatrix::from_fn(2 * m, 2 * m, |i, j| {
            if i == j && i < m {
                C64::new(q.powi(i as i32) / z, 0.0)
            } else {
                C64::zero()
            }
        });
        assert!(l.apply(&thermal).max_abs() < 1e-14);
        let nbar: f64 = (0..m).map(|k| k as f64 * thermal[(k, k)].re).sum();
        assert!((nbar - nth).abs() < 1e-6);
    }

    #[test]
    fn superoperator_matrix_matches_apply() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        let p = SystemParams::dimensionless(0.5, 0.4).with_bath(0.1, 1.0);
        let h = build_hamiltonian(&p, 0.1, Truncation::new(2).unwrap());
        let l = lindblad_superop(&p, &h).unwrap();
        let rho = random_hermitian(&mut rng, 4);
        let v = l.to_matrix().mul_vec(rho.as_slice());
        let direct = l.apply(&rho);
        for (a, b) in v.iter().zip(direct.as_slice()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_odd_dimension() {
        let p = SystemParams::dimensionless(0.5, 0.4);
        assert!(lindblad_superop(&p, &CMatrix::zeros(5, 5)).is_err());
    }
}
