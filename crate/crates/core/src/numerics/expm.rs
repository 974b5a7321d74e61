use super::{ComplexMatrix, NumericsError, Real};

/// Matrix exponential by scaling and squaring.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 1/2, the
/// Taylor series is summed until the next term is below machine epsilon
/// relative to the partial sum, and the result is squared `s` times.
pub fn matrix_exp<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::DimensionMismatch(format!(
            "matrix_exp needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(NumericsError::Domain("matrix_exp argument has non-finite entries".into()));
    }
    let n = a.rows();
    let half = T::lit(0.5);
    let mut squarings = 0u32;
    let mut norm = a.norm_one();
    while norm > half {
        norm = norm * half;
        squarings += 1;
    }
    let scaled = a.scale_real(T::lit(2.0).powi(-(squarings as i32)));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    let eps = T::epsilon();
    for k in 1..=60 {
        term = term.matmul(&scaled).scale_real(T::one() / T::from_usize_lossy(k));
        sum += &term;
        if term.max_abs() <= eps * sum.max_abs().max(T::one()) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    Ok(sum)
}
