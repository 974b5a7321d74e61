//! Gauss–Legendre rules and adaptive panel integration.

use super::{to_f64, NumericsError, Real};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes from Newton iteration on `P_n`, starting at the Chebyshev-like
    /// guesses `cos(pi (i + 3/4) / (n + 1/2))`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nn = T::from_usize_lossy(n);
        let two = T::lit(2.0);
        for i in 0..n.div_ceil(2) {
            let mut x = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nn + T::lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                // P_n(x) and P_{n-1}(x) by recurrence
                let (mut p0, mut p1) = (T::one(), x);
                for k in 2..=n {
                    let kk = T::from_usize_lossy(k);
                    let p2 = ((two * kk - T::one()) * x * p1 - (kk - T::one()) * p0) / kk;
                    p0 = p1;
                    p1 = p2;
                }
                let (pn, pn1) = if n == 1 { (x, T::one()) } else { (p1, p0) };
                dp = nn * (x * pn - pn1) / (x * x - T::one());
                let dx = pn / dp;
                x -= dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    break;
                }
            }
            let w = two / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Applies the rule on `[a, b]` to a vector-valued integrand, adding the
    /// result into `acc`.
    fn accumulate<F: FnMut(T, &mut [T])>(&self, f: &mut F, a: T, b: T, buf: &mut [T], acc: &mut [T]) {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        acc.iter_mut().for_each(|v| *v = T::zero());
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            buf.iter_mut().for_each(|v| *v = T::zero());
            f(mid + half * x, buf);
            for (s, &v) in acc.iter_mut().zip(buf.iter()) {
                *s += w * half * v;
            }
        }
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F, a: T, b: T) -> T {
        let mut acc = [T::zero()];
        let mut buf = [T::zero()];
        self.accumulate(&mut |x, out: &mut [T]| out[0] = f(x), a, b, &mut buf, &mut acc);
        acc[0]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Nodes per panel.
    pub order: usize,
    /// Maximum bisection depth of any initial panel.
    pub max_depth: usize,
}

impl<T: Real> Default for QuadratureOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-6), abs_tol: T::lit(1e-14), order: 12, max_depth: 40 }
    }
}

/// Adaptive integral of a vector-valued function over `[points[0], points[last]]`.
///
/// `points` are ascending panel boundaries; put known peaks or kinks on
/// them. Each panel is compared against its two halves and bisected until
/// the difference falls below its length-proportional share of
/// `max(abs_tol, rel_tol * |I|)` (componentwise maximum norm).
pub fn integrate_adaptive_vec<T, F>(
    mut f: F,
    dim: usize,
    points: &[T],
    opts: &QuadratureOptions<T>,
) -> Result<Vec<T>, NumericsError>
where
    T: Real,
    F: FnMut(T, &mut [T]),
{
    if points.len() < 2 || points.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(NumericsError::Domain("quadrature breakpoints must be ascending, at least two".into()));
    }
    let rule = GaussLegendre::new(opts.order);
    let total_len = points[points.len() - 1] - points[0];
    let mut buf = vec![T::zero(); dim];
    let mut total = vec![T::zero(); dim];
    if total_len.is_zero() {
        return Ok(total);
    }
    let norm = |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs()));

    // coarse pass sets the tolerance scale
    let mut stack: Vec<(T, T, Vec<T>, usize)> = Vec::new();
    let mut coarse_total = vec![T::zero(); dim];
    for w in points.windows(2).rev() {
        if w[1] == w[0] {
            continue;
        }
        let mut est = vec![T::zero(); dim];
        rule.accumulate(&mut f, w[0], w[1], &mut buf, &mut est);
        for (c, e) in coarse_total.iter_mut().zip(&est) {
            *c += *e;
        }
        stack.push((w[0], w[1], est, 0));
    }
    let tol = opts.abs_tol.max(opts.rel_tol * norm(&coarse_total));

    let mut left = vec![T::zero(); dim];
    let mut right = vec![T::zero(); dim];
    while let Some((a, b, whole, depth)) = stack.pop() {
        let m = (a + b) * T::lit(0.5);
        rule.accumulate(&mut f, a, m, &mut buf, &mut left);
        rule.accumulate(&mut f, m, b, &mut buf, &mut right);
        let err = whole
            .iter()
            .zip(left.iter().zip(&right))
            .fold(T::zero(), |acc, (w, (l, r))| acc.max((*l + *r - *w).abs()));
        let share = tol * (b - a) / total_len;
        if err <= share || err <= T::epsilon() * T::lit(16.0) * norm(&whole) {
            for (t, (l, r)) in total.iter_mut().zip(left.iter().zip(&right)) {
                *t += *l + *r;
            }
        } else if depth >= opts.max_depth {
            return Err(NumericsError::Quadrature { a: to_f64(a), b: to_f64(b), error: to_f64(err) });
        } else {
            stack.push((m, b, right.clone(), depth + 1));
            stack.push((a, m, left.clone(), depth + 1));
        }
    }
    Ok(total)
}

/// Scalar form of [`integrate_adaptive_vec`].
pub fn integrate_adaptive<T, F>(mut f: F, points: &[T], opts: &QuadratureOptions<T>) -> Result<T, NumericsError>
where
    T: Real,
    F: FnMut(T) -> T,
{
    integrate_adaptive_vec(|x, out: &mut [T]| out[0] = f(x), 1, points, opts).map(|v| v[0])
}
