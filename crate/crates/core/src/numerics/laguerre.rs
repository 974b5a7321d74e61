use super::{NumericsError, Real};

/// Largest degree and order accepted by [`assoc_laguerre`].
pub const MAX_LAGUERRE_ORDER: usize = 200;

/// Generalized Laguerre polynomial `L_n^{(k)}(x)`, evaluated with the
/// upward three-term recurrence in `n`:
///
/// `(j+1) L_{j+1} = (2j + 1 + k - x) L_j - (j + k) L_{j-1}`.
pub fn assoc_laguerre<T: Real>(n: usize, k: usize, x: T) -> Result<T, NumericsError> {
    if n > MAX_LAGUERRE_ORDER || k > MAX_LAGUERRE_ORDER {
        return Err(NumericsError::Domain(format!(
            "Laguerre degree/order ({n}, {k}) exceeds {MAX_LAGUERRE_ORDER}"
        )));
    }
    if !x.is_finite() {
        return Err(NumericsError::Domain("Laguerre argument is not finite".into()));
    }
    let kk = T::from_usize_lossy(k);
    let mut prev = T::one();
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = T::one() + kk - x;
    for j in 1..n {
        let jj = T::from_usize_lossy(j);
        let next = ((jj + jj + T::one() + kk - x) * cur - (jj + kk) * prev) / (jj + T::one());
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    /// Explicit series `Σ_i (-1)^i C(n+k, n-i) x^i / i!` in exact rational
    /// arithmetic, for `x = num / den`. Independent of the recurrence.
    fn series_oracle(n: usize, k: usize, num: i64, den: i64) -> f64 {
        let binom = |a: usize, b: usize| {
            (0..b).fold(BigRational::one(), |acc, i| {
                acc * BigRational::new(BigInt::from(a - i), BigInt::from(i + 1))
            })
        };
        let x = BigRational::new(BigInt::from(num), BigInt::from(den));
        let mut sum = BigRational::zero();
        let mut term_x = BigRational::one(); // x^i / i!
        for i in 0..=n {
            if i > 0 {
                term_x = term_x * &x / BigRational::from_integer(BigInt::from(i));
            }
            let t = binom(n + k, n - i) * &term_x;
            if i % 2 == 0 {
                sum += t;
            } else {
                sum -= t;
            }
        }
        sum.to_f64().unwrap()
    }

    #[test]
    fn degree_zero_is_one() {
        assert_eq!(assoc_laguerre(0, 7, 3.2_f64).unwrap(), 1.0);
    }

    #[test]
    fn degree_one_is_linear() {
        assert!((assoc_laguerre(1, 2, 0.5_f64).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn series_value_n3_k2() {
        // Series oracle: 10 - 15 + 5.625 - 0.5625 = 0.0625 exactly.
        assert_eq!(series_oracle(3, 2, 3, 2), 0.0625);
        assert!((assoc_laguerre(3, 2, 1.5_f64).unwrap() - 0.0625).abs() < 1e-14);
    }

    #[test]
    fn matches_series_oracle_on_grid() {
        for n in 0..=30 {
            for k in 0..=30 {
                for step in 0..=20 {
                    let x = step as f64 * 0.5;
                    let exact = series_oracle(n, k, step, 2);
                    let got = assoc_laguerre(n, k, x).unwrap();
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (got - exact).abs() <= 1e-10 * scale,
                        "L_{n}^{k}({x}): {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_precision_agrees() {
        let a = assoc_laguerre(5, 3, 2.25_f32).unwrap() as f64;
        let b = assoc_laguerre(5, 3, 2.25_f64).unwrap();
        assert!((a - b).abs() < 1e-4 * b.abs().max(1.0));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(assoc_laguerre(201, 0, 1.0_f64).is_err());
        assert!(assoc_laguerre(1, 0, f64::NAN).is_err());
    }
}
