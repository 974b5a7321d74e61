//! Fixed-step fourth-order integrators.
//!
//! [`rk4_step`] is the classic Runge–Kutta scheme. [`rk4ip_step`] is the
//! integrating-factor ("interaction picture") variant: the state is split as
//! `y' = A y + N(t, y)` where the flow of the linear part `A` is supplied
//! exactly, so the step size is limited only by the time scales of `N`.

use super::{to_f64, Complex, ComplexMatrix, NumericsError, Real};

/// A state that can be integrated: a real vector space with a finiteness
/// check and a distance.
pub trait OdeState<T: Real>: Clone {
    /// `self += a * other`
    fn add_scaled(&mut self, a: T, other: &Self);
    fn is_finite(&self) -> bool;
    /// Largest componentwise modulus of `self - other`.
    fn max_abs_diff(&self, other: &Self) -> T;
}

impl<T: Real> OdeState<T> for T {
    fn add_scaled(&mut self, a: T, other: &Self) {
        *self += a * *other;
    }
    fn is_finite(&self) -> bool {
        num_traits::Float::is_finite(*self)
    }
    fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).abs()
    }
}

impl<T: Real> OdeState<T> for Complex<T> {
    fn add_scaled(&mut self, a: T, other: &Self) {
        *self += *other * a;
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).norm()
    }
}

impl<T: Real, S: OdeState<T>> OdeState<T> for Vec<S> {
    fn add_scaled(&mut self, a: T, other: &Self) {
        assert_eq!(self.len(), other.len());
        for (x, y) in self.iter_mut().zip(other) {
            x.add_scaled(a, y);
        }
    }
    fn is_finite(&self) -> bool {
        self.iter().all(OdeState::is_finite)
    }
    fn max_abs_diff(&self, other: &Self) -> T {
        self.iter().zip(other).fold(T::zero(), |acc, (x, y)| acc.max(x.max_abs_diff(y)))
    }
}

impl<T: Real> OdeState<T> for ComplexMatrix<T> {
    fn add_scaled(&mut self, a: T, other: &Self) {
        self.axpy(Complex::new(a, T::zero()), other);
    }
    fn is_finite(&self) -> bool {
        ComplexMatrix::is_finite(self)
    }
    fn max_abs_diff(&self, other: &Self) -> T {
        (self - other).max_abs()
    }
}

fn combine<T: Real, S: OdeState<T>>(base: &S, terms: &[(T, &S)]) -> S {
    let mut out = base.clone();
    for &(a, s) in terms {
        if !a.is_zero() {
            out.add_scaled(a, s);
        }
    }
    out
}

/// One classic RK4 step of `y' = f(t, y)`.
pub fn rk4_step<T, S, F>(f: &mut F, t: T, y: &S, h: T) -> S
where
    T: Real,
    S: OdeState<T>,
    F: FnMut(T, &S) -> S,
{
    let half = T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let k1 = f(t, y);
    let k2 = f(t + half * h, &combine(y, &[(half * h, &k1)]));
    let k3 = f(t + half * h, &combine(y, &[(half * h, &k2)]));
    let k4 = f(t + h, &combine(y, &[(h, &k3)]));
    let two = T::lit(2.0);
    combine(y, &[(sixth, &k1), (two * sixth, &k2), (two * sixth, &k3), (sixth, &k4)])
}

/// One integrating-factor RK4 step of `y' = A y + N(t, y)`.
///
/// `half_flow` must apply `exp(A h / 2)` for the same `h` on every call.
pub fn rk4ip_step<T, S, P, F>(half_flow: &mut P, n: &mut F, t: T, y: &S, h: T) -> S
where
    T: Real,
    S: OdeState<T>,
    P: FnMut(&S) -> S,
    F: FnMut(T, &S) -> S,
{
    let half = T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let y_i = half_flow(y);
    let k1 = half_flow(&n(t, y));
    let k2 = n(t + half * h, &combine(&y_i, &[(half * h, &k1)]));
    let k3 = n(t + half * h, &combine(&y_i, &[(half * h, &k2)]));
    let k4 = n(t + h, &half_flow(&combine(&y_i, &[(h, &k3)])));
    let mid = combine(&y_i, &[(sixth, &k1), (two * sixth, &k2), (two * sixth, &k3)]);
    combine(&half_flow(&mid), &[(sixth, &k4)])
}

#[derive(Clone, Copy, Debug)]
pub struct StepControl<T> {
    /// Largest step; each interval between samples is split into equal steps
    /// no longer than this.
    pub step: T,
    /// Repeat the integration at half the step and report the largest sample
    /// difference.
    pub estimate_error: bool,
}

impl<T: Real> StepControl<T> {
    pub fn fixed(step: T) -> Self {
        Self { step, estimate_error: false }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<T, S> {
    pub times: Vec<T>,
    pub states: Vec<S>,
    /// Largest sample difference between step `h` and `h/2` runs, if requested.
    pub error_estimate: Option<T>,
}

/// Integrates `y' = rhs(t, y)` from `t0` with fixed-step RK4 and records the
/// state at each of `samples` (ascending, within `[t0, t1]`). An empty
/// sample list records `t1` only.
pub fn ode_integrate<T, S, F>(
    mut rhs: F,
    y0: S,
    t0: T,
    t1: T,
    control: &StepControl<T>,
    samples: &[T],
) -> Result<Trajectory<T, S>, NumericsError>
where
    T: Real,
    S: OdeState<T>,
    F: FnMut(T, &S) -> S,
{
    let default_samples = [t1];
    let samples = if samples.is_empty() { &default_samples[..] } else { samples };
    if !(control.step > T::zero()) {
        return Err(NumericsError::Domain("integration step must be positive".into()));
    }
    if samples.windows(2).any(|w| w[1] < w[0])
        || samples.first().is_some_and(|&s| s < t0)
        || samples.last().is_some_and(|&s| s > t1)
    {
        return Err(NumericsError::Domain("sample times must be ascending within [t0, t1]".into()));
    }
    let run = |rhs: &mut F, step: T| -> Result<Vec<S>, NumericsError> {
        let mut out = Vec::with_capacity(samples.len());
        let mut t = t0;
        let mut y = y0.clone();
        for &ts in samples {
            let span = ts - t;
            if span > T::zero() {
                let n = (span / step).ceil().to_usize().unwrap_or(1).max(1);
                let h = span / T::from_usize_lossy(n);
                for i in 0..n {
                    let ti = t + h * T::from_usize_lossy(i);
                    y = rk4_step(rhs, ti, &y, h);
                    if !y.is_finite() {
                        return Err(NumericsError::NonFinite { time: to_f64(ti + h) });
                    }
                }
                t = ts;
            }
            out.push(y.clone());
        }
        Ok(out)
    };
    let states = run(&mut rhs, control.step)?;
    let error_estimate = if control.estimate_error {
        let fine = run(&mut rhs, control.step * T::lit(0.5))?;
        Some(states.iter().zip(&fine).fold(T::zero(), |acc, (a, b)| acc.max(a.max_abs_diff(b))))
    } else {
        None
    };
    Ok(Trajectory { times: samples.to_vec(), states, error_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_state_is_preserved() {
        let traj = ode_integrate(|_, _: &f64| 0.0, 3.5, 0.0, 2.0, &StepControl::fixed(0.1), &[]).unwrap();
        assert_eq!(traj.states, vec![3.5]);
    }

    #[test]
    fn exponential_decay() {
        let traj = ode_integrate(|_, y: &f64| -y, 1.0, 0.0, 1.0, &StepControl::fixed(1e-3), &[]).unwrap();
        assert!((traj.states[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn rotation_preserves_modulus() {
        let w = 3.0;
        let traj = ode_integrate(
            |_, y: &Complex<f64>| Complex::new(0.0, w) * y,
            Complex::new(1.0, 0.0),
            0.0,
            1.0,
            &StepControl::fixed(1e-3),
            &[0.25, 0.5, 1.0],
        )
        .unwrap();
        for s in &traj.states {
            assert!((s.norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |h: f64| {
            let t = ode_integrate(|_, y: &f64| -y, 1.0, 0.0, 1.0, &StepControl::fixed(h), &[]).unwrap();
            (t.states[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio >= 8.0, "error ratio {ratio}");
    }

    #[test]
    fn step_halving_estimate_is_reported() {
        let ctl = StepControl { step: 0.1, estimate_error: true };
        let t = ode_integrate(|_, y: &f64| -y, 1.0, 0.0, 1.0, &ctl, &[]).unwrap();
        let est = t.error_estimate.unwrap();
        assert!(est > 0.0 && est < 1e-5);
    }

    #[test]
    fn blow_up_is_reported_with_time() {
        let res = ode_integrate(|_, y: &f64| y * y, 1.0, 0.0, 2.0, &StepControl::fixed(1e-2), &[]);
        match res {
            Err(NumericsError::NonFinite { time }) => assert!(time > 0.9 && time <= 2.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn integrating_factor_step_ignores_fast_linear_part() {
        // y' = i w y - (1/2 + cos(t)/5) y, exact: exp(i w t - t/2 - sin(t)/5).
        // w h = 20 would wreck plain RK4; the exact flow absorbs it.
        let w = 400.0;
        let h = 0.05;
        let phase = Complex::new(0.0, w * h / 2.0).exp();
        let mut flow = |y: &Complex<f64>| y * phase;
        let mut n = |t: f64, y: &Complex<f64>| -y * (0.5 + 0.2 * t.cos());
        let mut y = Complex::new(1.0, 0.0);
        for i in 0..40 {
            y = rk4ip_step(&mut flow, &mut n, i as f64 * h, &y, h);
        }
        let t: f64 = 2.0;
        let exact = Complex::new(-0.5 * t - 0.2 * t.sin(), w * t).exp();
        assert!((y - exact).norm() < 1e-7, "{y} vs {exact}");
    }
}
