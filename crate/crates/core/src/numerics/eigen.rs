use num_traits::{One, Zero};

use super::{Complex, ComplexMatrix, NumericsError, Real};

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> EigenDecomposition<T> {
    /// `V f(Λ) V†`.
    pub fn map_values(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).fold(Complex::zero(), |acc, k| acc + v[(i, k)] * v[(j, k)].conj() * fv[k])
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.map_values(|x| x)
    }
}

const MAX_QL_ITERATIONS: usize = 60;

/// Eigendecomposition of a Hermitian matrix.
///
/// Householder reflections reduce the matrix to Hermitian tridiagonal form,
/// a diagonal phase transform makes the off-diagonal real, and implicit QL
/// with Wilkinson-style shifts diagonalizes the resulting real symmetric
/// tridiagonal matrix.
pub fn hermitian_eig<T: Real>(a: &ComplexMatrix<T>) -> Result<EigenDecomposition<T>, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::DimensionMismatch(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.max_abs().max(T::one());
    let tol = T::lit(1e-10).max(T::lit(100.0) * T::epsilon()) * scale;
    let dev = a.hermitian_deviation();
    if !(dev <= tol) {
        return Err(NumericsError::NotHermitian { deviation: super::to_f64(dev) });
    }
    let n = a.rows();
    let half = T::lit(0.5);
    let mut h = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * half);
    let mut q = ComplexMatrix::<T>::identity(n);

    tridiagonalize(&mut h, &mut q);

    let mut diag: Vec<T> = (0..n).map(|i| h[(i, i)].re).collect();
    let mut off = vec![T::zero(); n];
    let mut phase = vec![Complex::<T>::one(); n];
    for i in 0..n.saturating_sub(1) {
        let e = h[(i + 1, i)];
        let r = e.norm();
        off[i] = r;
        phase[i + 1] = if r > T::zero() { phase[i] * (e / r) } else { phase[i] };
    }

    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    tql(&mut diag, &mut off, &mut z, n)?;

    // V = Q Φ Z
    let mut vectors = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let qk = q[(i, k)] * phase[k];
            if qk.is_zero() {
                continue;
            }
            for j in 0..n {
                vectors[(i, j)] += qk * z[k * n + j];
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[x].partial_cmp(&diag[y]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| diag[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(EigenDecomposition { values, vectors })
}

/// In-place reduction `h <- Q† h Q` to Hermitian tridiagonal form,
/// accumulating `q <- q Q`.
fn tridiagonalize<T: Real>(h: &mut ComplexMatrix<T>, q: &mut ComplexMatrix<T>) {
    let n = h.rows();
    let two = T::lit(2.0);
    let mut v = vec![Complex::<T>::zero(); n];
    let mut p = vec![Complex::<T>::zero(); n];
    for k in 0..n.saturating_sub(2) {
        let sigma = (k + 1..n).fold(T::zero(), |acc, i| acc + h[(i, k)].norm_sqr()).sqrt();
        if sigma == T::zero() {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let ph = if x0.norm() > T::zero() { x0 / x0.norm() } else { Complex::one() };
        v.iter_mut().for_each(|z| *z = Complex::zero());
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] += ph * sigma;
        let vnorm2 = (k + 1..n).fold(T::zero(), |acc, i| acc + v[i].norm_sqr());
        if vnorm2 == T::zero() {
            continue;
        }
        let tau = two / vnorm2;

        // p = τ H v
        for i in 0..n {
            let mut s = Complex::zero();
            for j in k + 1..n {
                s += h[(i, j)] * v[j];
            }
            p[i] = s * tau;
        }
        let vp = (k + 1..n).fold(Complex::zero(), |acc, i| acc + v[i].conj() * p[i]);
        let kk = vp * (tau * T::lit(0.5));
        // w = p - K v ; H <- H - v w† - w v†
        for i in 0..n {
            p[i] -= kk * v[i];
        }
        for i in 0..n {
            for j in 0..n {
                let upd = v[i] * p[j].conj() + p[i] * v[j].conj();
                if !upd.is_zero() {
                    h[(i, j)] -= upd;
                }
            }
        }
        // Q <- Q - τ (Q v) v†
        for i in 0..n {
            let mut qv = Complex::zero();
            for j in k + 1..n {
                qv += q[(i, j)] * v[j];
            }
            let qv = qv * tau;
            for j in k + 1..n {
                q[(i, j)] -= qv * v[j].conj();
            }
        }
    }
}

/// Implicit QL on a real symmetric tridiagonal matrix. `d` holds the
/// diagonal, `e[i]` couples rows `i` and `i+1`. Eigenvectors accumulate in
/// the row-major `n x n` matrix `z`.
fn tql<T: Real>(d: &mut [T], e: &mut [T], z: &mut [T], n: usize) -> Result<(), NumericsError> {
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(NumericsError::NoConvergence(MAX_QL_ITERATIONS));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zi = z[k * n + i];
                    let zi1 = z[k * n + i + 1];
                    z[k * n + i + 1] = s * zi + c * zi1;
                    z[k * n + i] = c * zi - s * zi1;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
