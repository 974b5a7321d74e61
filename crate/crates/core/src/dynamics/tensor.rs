//! Blocks of operators on `M^modes`-dimensional mechanical spaces and the
//! kernels that apply single-mode operators along one tensor axis.

use num_traits::Zero;

use crate::{CMatrix, C64};

/// Shape of a block: `modes` mechanical oscillators with `phonon_dim`
/// levels each. A block is a dense `D x D` matrix, `D = phonon_dim^modes`,
/// stored row-major; mode 0 is the slowest index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub modes: usize,
    pub phonon_dim: usize,
}

impl Layout {
    pub fn new(modes: usize, phonon_dim: usize) -> Self {
        assert!(modes >= 1 && phonon_dim >= 2);
        Self { modes, phonon_dim }
    }

    /// Dimension `D` of the joint mechanical space.
    pub fn mech_dim(&self) -> usize {
        self.phonon_dim.pow(self.modes as u32)
    }

    /// Vacuum plus one single-photon state per cavity.
    pub fn optical_dim(&self) -> usize {
        1 + self.modes
    }

    pub fn block_len(&self) -> usize {
        self.mech_dim() * self.mech_dim()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.phonon_dim.pow((self.modes - 1 - axis) as u32)
    }

    /// Occupation of mode `axis` in the joint basis state `index`.
    pub fn digit(&self, index: usize, axis: usize) -> usize {
        (index / self.stride(axis)) % self.phonon_dim
    }

    /// Joint index of the occupations `digits` (one per mode).
    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.phonon_dim + d)
    }
}

/// Single-mode operator, kept both as nonzero `(row, col, value)` triplets
/// and as a dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOp {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
    dense: Vec<C64>,
}

impl ModeOp {
    pub fn from_dense(m: &CMatrix) -> Self {
        assert!(m.is_square());
        let entries = (0..m.rows())
            .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
            .filter(|&(i, j)| !m[(i, j)].is_zero())
            .map(|(i, j)| (i, j, m[(i, j)]))
            .collect();
        Self { dim: m.rows(), entries, dense: m.as_slice().to_vec() }
    }

    pub fn annihilation(dim: usize) -> Self {
        let b = CMatrix::from_fn(dim, dim, |i, j| {
            if j == i + 1 {
                C64::new((j as f64).sqrt(), 0.0)
            } else {
                C64::zero()
            }
        });
        Self::from_dense(&b)
    }

    pub fn adjoint(&self) -> Self {
        let m = CMatrix::from_vec(self.dim, self.dim, self.dense.clone()).expect("square");
        Self::from_dense(&m.adjoint())
    }
}

/// `y[o, p, i] += s * sum_q op[p, q] x[o, q, i]` on a tensor of shape
/// `(outer, op.dim, inner)`, with `op` conjugated when `conj` is set.
fn apply_axis(op: &ModeOp, conj: bool, s: C64, outer: usize, inner: usize, x: &[C64], y: &mut [C64]) {
    let m = op.dim;
    debug_assert_eq!(x.len(), outer * m * inner);
    if inner == 1 {
        // contiguous fibres: a small mat-vec per fibre
        let mat: Vec<C64> = op.dense.iter().map(|&v| if conj { v.conj() } else { v } * s).collect();
        for (xo, yo) in x.chunks_exact(m).zip(y.chunks_exact_mut(m)) {
            for (p, yp) in yo.iter_mut().enumerate() {
                let row = &mat[p * m..(p + 1) * m];
                *yp += row.iter().zip(xo).fold(C64::zero(), |acc, (a, b)| acc + a * b);
            }
        }
        return;
    }
    for &(p, q, v) in &op.entries {
        let v = if conj { v.conj() } else { v } * s;
        for o in 0..outer {
            let src = &x[(o * m + q) * inner..(o * m + q + 1) * inner];
            let dst = &mut y[(o * m + p) * inner..(o * m + p + 1) * inner];
            for (d, a) in dst.iter_mut().zip(src) {
                *d += v * a;
            }
        }
    }
}

/// `y += s * (op on mode axis) x` for a block `x`.
pub fn left_apply(layout: &Layout, op: &ModeOp, axis: usize, s: C64, x: &[C64], y: &mut [C64]) {
    let d = layout.mech_dim();
    let outer = d / (layout.stride(axis) * layout.phonon_dim);
    apply_axis(op, false, s, outer, layout.stride(axis) * d, x, y);
}

/// `y += s * x (op on mode axis)^dag` for a block `x`.
pub fn right_apply_adj(layout: &Layout, op: &ModeOp, axis: usize, s: C64, x: &[C64], y: &mut [C64]) {
    let d = layout.mech_dim();
    let outer = d * d / (layout.stride(axis) * layout.phonon_dim);
    apply_axis(op, true, s, outer, layout.stride(axis), x, y);
}

pub fn trace(layout: &Layout, x: &[C64]) -> C64 {
    let d = layout.mech_dim();
    (0..d).fold(C64::zero(), |acc, i| acc + x[i * d + i])
}

pub fn axpy(s: C64, x: &[C64], y: &mut [C64]) {
    for (b, a) in y.iter_mut().zip(x) {
        *b += s * a;
    }
}

/// `y += s * x^dag` for square blocks of side `d`.
pub fn axpy_adjoint(d: usize, s: C64, x: &[C64], y: &mut [C64]) {
    for i in 0..d {
        for j in 0..d {
            y[i * d + j] += s * x[j * d + i].conj();
        }
    }
}

pub fn to_matrix(layout: &Layout, x: &[C64]) -> CMatrix {
    let d = layout.mech_dim();
    CMatrix::from_vec(d, d, x.to_vec()).expect("block has D x D entries")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_block(rng: &mut impl Rng, n: usize) -> Vec<C64> {
        (0..n * n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn embed(layout: &Layout, op: &CMatrix, axis: usize) -> CMatrix {
        let mut out = CMatrix::identity(1);
        for a in 0..layout.modes {
            let f = if a == axis { op.clone() } else { CMatrix::identity(layout.phonon_dim) };
            out = out.kron(&f);
        }
        out
    }

    #[test]
    fn axis_kernels_match_kronecker_products() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for &(modes, m) in &[(1usize, 5usize), (2, 3), (2, 4)] {
            let layout = Layout::new(modes, m);
            let d = layout.mech_dim();
            let op = CMatrix::from_fn(m, m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let mop = ModeOp::from_dense(&op);
            let x = random_block(&mut rng, d);
            let xm = to_matrix(&layout, &x);
            for axis in 0..modes {
                let full = embed(&layout, &op, axis);
                let s = C64::new(0.3, -1.2);
                let mut y = vec![C64::zero(); d * d];
                left_apply(&layout, &mop, axis, s, &x, &mut y);
                let want = full.matmul(&xm).scale(s);
                assert!((&to_matrix(&layout, &y) - &want).max_abs() < 1e-12);
                let mut y = vec![C64::zero(); d * d];
                right_apply_adj(&layout, &mop, axis, s, &x, &mut y);
                let want = xm.matmul(&full.adjoint()).scale(s);
                assert!((&to_matrix(&layout, &y) - &want).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn digits_round_trip() {
        let layout = Layout::new(2, 7);
        for i in 0..49 {
            let digits = [layout.digit(i, 0), layout.digit(i, 1)];
            assert_eq!(layout.index(&digits), i);
        }
        assert_eq!(layout.index(&[2, 5]), 19);
    }

    #[test]
    fn ladder_operator_entries() {
        let b = ModeOp::annihilation(4);
        assert_eq!(b.entries.len(), 3);
        assert_eq!(b.entries[2], (2, 3, C64::new(3f64.sqrt(), 0.0)));
        assert_eq!(b.adjoint().entries[0], (1, 0, C64::new(1.0, 0.0)));
    }
}
