use num_traits::Zero;

use super::{SpectralDensity, Transport, TransportError};
use crate::model::{SystemParams, Truncation};
use crate::numerics::quadrature::{integrate_adaptive_vec, QuadratureOptions};
use crate::numerics::{Complex, Real};

/// Output frequency grid for [`transmitted_spectrum`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridSpec<T> {
    /// `[c - (M_sb + 1) omega_M, c + (m0 + 2) omega_M]` around the input
    /// carrier `c` with step `omega_M / 400`, where `M_sb` red sidebands hold
    /// 99.99% of the transmitted weight. Widened by `omega_M` on a side while
    /// the spectrum at that edge exceeds `1e-6` of its peak.
    Auto,
    Uniform { start: T, stop: T, step: T },
}

/// Transmitted spectrum `S(dw)` on a uniform grid of output detunings.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub dw: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn step(&self) -> T {
        if self.dw.len() < 2 {
            T::zero()
        } else {
            self.dw[1] - self.dw[0]
        }
    }

    /// Trapezoidal `int S ddw`; equals the transmitted flux on a wide enough grid.
    pub fn integral(&self) -> T {
        let h = self.step();
        let n = self.values.len();
        if n < 2 {
            return T::zero();
        }
        let inner = self.values[1..n - 1].iter().fold(T::zero(), |a, &v| a + v);
        h * (inner + (self.values[0] + self.values[n - 1]) * T::lit(0.5))
    }

    /// Weight in `[center - width/2, center + width/2]` (grid points inside,
    /// each with weight `step`).
    pub fn bin_weight(&self, center: T, width: T) -> T {
        let h = self.step();
        let half = width * T::lit(0.5);
        self.dw
            .iter()
            .zip(&self.values)
            .filter(|(&w, _)| (w - center).abs() <= half)
            .fold(T::zero(), |acc, (_, &v)| acc + v * h)
    }

    /// Grid value nearest to `dw`.
    pub fn value_at(&self, dw: T) -> T {
        let h = self.step();
        if h.is_zero() {
            return self.values.first().copied().unwrap_or(T::zero());
        }
        let i = ((dw - self.dw[0]) / h).round().to_isize().unwrap_or(0);
        let i = i.clamp(0, self.values.len() as isize - 1) as usize;
        self.values[i]
    }

    /// Indices of strict interior local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        let v = &self.values;
        (1..v.len().saturating_sub(1)).filter(|&i| v[i] < v[i - 1] && v[i] <= v[i + 1]).collect()
    }

    /// `sum |S_a - S_b| / sum |S_b|` on a shared grid.
    pub fn l1_distance(&self, reference: &Self) -> T {
        let num = self.values.iter().zip(&reference.values).fold(T::zero(), |a, (x, y)| a + (*x - *y).abs());
        let den = reference.values.iter().fold(T::zero(), |a, y| a + y.abs());
        num / den
    }
}

/// Panel boundaries for integrating over the input: support edges, table
/// nodes and every resonance inside the support.
fn breakpoints<T: Real>(input: &SpectralDensity<T>, transport: &Transport<T>) -> Vec<T> {
    let (lo, hi) = input.support();
    let mut pts: Vec<T> = input
        .nodes()
        .into_iter()
        .chain(transport.resonances())
        .filter(|&x| x > lo && x < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    pts
}

fn probabilities_with<T: Real>(
    transport: &Transport<T>,
    input: &SpectralDensity<T>,
) -> Result<Vec<T>, TransportError> {
    input.check_normalized()?;
    let dim = transport.phonon_dim();
    let mut amps = vec![Complex::zero(); dim];
    let opts = QuadratureOptions { rel_tol: T::lit(1e-8), abs_tol: T::lit(1e-13), ..Default::default() };
    let pts = breakpoints(input, transport);
    let out = integrate_adaptive_vec(
        |w, out: &mut [T]| {
            let weight = input.intensity(w);
            if weight.is_zero() {
                return;
            }
            transport.amplitudes_into(w, &mut amps);
            for (o, a) in out.iter_mut().zip(&amps) {
                *o = weight * a.norm_sqr();
            }
        },
        dim,
        &pts,
        &opts,
    )?;
    Ok(out)
}

/// `P_m = int |F(w)|^2 |t_m(w)|^2 dw` for every final phonon number `m`.
pub fn sideband_probabilities<T: Real>(
    params: &SystemParams<T>,
    input: &SpectralDensity<T>,
    m0: usize,
    trunc: Truncation,
) -> Result<Vec<T>, TransportError> {
    probabilities_with(&Transport::new(params, m0, trunc)?, input)
}

/// Probability that the transmitted photon leaves the oscillator in `|m>`.
pub fn sideband_probability<T: Real>(
    params: &SystemParams<T>,
    input: &SpectralDensity<T>,
    m0: usize,
    m: usize,
    trunc: Truncation,
) -> Result<T, TransportError> {
    if m >= trunc.phonon_dim() {
        return Err(TransportError::InvalidInput(format!(
            "final phonon number {m} outside truncation M = {}",
            trunc.phonon_dim()
        )));
    }
    Ok(sideband_probabilities(params, input, m0, trunc)?[m])
}

fn carrier<T: Real>(input: &SpectralDensity<T>) -> T {
    match input {
        SpectralDensity::Gaussian { omega0, .. } => *omega0,
        SpectralDensity::Tabulated { omega, amplitude } => {
            let (num, den) = omega
                .iter()
                .zip(amplitude)
                .fold((T::zero(), T::zero()), |(n, d), (&w, &a)| (n + w * a * a, d + a * a));
            if den.is_zero() {
                (omega[0] + omega[omega.len() - 1]) * T::lit(0.5)
            } else {
                num / den
            }
        }
    }
}

fn evaluate<T: Real>(transport: &Transport<T>, input: &SpectralDensity<T>, dw: &[T]) -> Vec<T> {
    let dim = transport.phonon_dim();
    let m0 = T::from_usize_lossy(transport.m0());
    let wm = transport.params().omega_m;
    let mut amps = vec![Complex::zero(); dim];
    dw.iter()
        .map(|&w| {
            (0..dim).fold(T::zero(), |acc, m| {
                let w_in = w + (T::from_usize_lossy(m) - m0) * wm;
                let weight = input.intensity(w_in);
                if weight <= T::zero() {
                    return acc;
                }
                transport.amplitudes_into(w_in, &mut amps);
                acc + weight * amps[m].norm_sqr()
            })
        })
        .collect()
}

fn uniform<T: Real>(start: T, stop: T, step: T) -> Vec<T> {
    let n = ((stop - start) / step).round().to_usize().unwrap_or(0);
    (0..=n).map(|i| start + step * T::from_usize_lossy(i)).collect()
}

/// `S(dw) = sum_m |F(w_m)|^2 |t_m(w_m)|^2` with `w_m = dw + (m - m0) omega_M`:
/// every final phonon state contributes its own, non-interfering sideband.
pub fn transmitted_spectrum<T: Real>(
    params: &SystemParams<T>,
    input: &SpectralDensity<T>,
    m0: usize,
    grid: GridSpec<T>,
    trunc: Truncation,
) -> Result<Spectrum<T>, TransportError> {
    let transport = Transport::new(params, m0, trunc)?;
    match grid {
        GridSpec::Uniform { start, stop, step } => {
            if !(step > T::zero()) || !(stop >= start) {
                return Err(TransportError::InvalidInput("spectrum grid needs step > 0 and stop >= start".into()));
            }
            let dw = uniform(start, stop, step);
            let values = evaluate(&transport, input, &dw);
            Ok(Spectrum { dw, values })
        }
        GridSpec::Auto => {
            let wm = params.omega_m;
            let probs = probabilities_with(&transport, input)?;
            let total = probs.iter().fold(T::zero(), |a, &p| a + p);
            let mut acc = T::zero();
            let mut reach = 0;
            for (m, &p) in probs.iter().enumerate() {
                acc += p;
                if m >= m0 && acc >= T::lit(0.9999) * total {
                    reach = m - m0;
                    break;
                }
            }
            let c = carrier(input);
            let step = wm / T::lit(400.0);
            let mut lo = c - T::from_usize_lossy(reach + 1) * wm;
            let mut hi = c + T::from_usize_lossy(m0 + 2) * wm;
            for _ in 0..16 {
                let dw = uniform(lo, hi, step);
                let values = evaluate(&transport, input, &dw);
                let peak = values.iter().fold(T::zero(), |a, &v| a.max(v));
                let tol = T::lit(1e-6) * peak;
                let (grow_lo, grow_hi) = (values[0] > tol, values[values.len() - 1] > tol);
                if !grow_lo && !grow_hi {
                    return Ok(Spectrum { dw, values });
                }
                if grow_lo {
                    lo -= wm;
                }
                if grow_hi {
                    hi += wm;
                }
            }
            let dw = uniform(lo, hi, step);
            let values = evaluate(&transport, input, &dw);
            Ok(Spectrum { dw, values })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(w0: f64, d: f64) -> SpectralDensity<f64> {
        SpectralDensity::gaussian(w0, d).unwrap()
    }

    #[test]
    fn decoupled_spectrum_passes_unchanged() {
        let p = SystemParams::dimensionless(0.0, 0.2);
        let f = gauss(0.1, 0.2);
        let s = transmitted_spectrum(&p, &f, 0, GridSpec::Auto, Truncation::new(16).unwrap()).unwrap();
        for (&w, &v) in s.dw.iter().zip(&s.values) {
            assert!((v - f.intensity(w)).abs() < 1e-12);
        }
        assert!((s.integral() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decoupled_probability_is_one() {
        let p = SystemParams::dimensionless(0.0, 0.4);
        let pr = sideband_probability(&p, &gauss(0.0, 0.2), 2, 2, Truncation::new(16).unwrap()).unwrap();
        assert!((pr - 1.0).abs() < 1e-9);
    }

    #[test]
    fn probabilities_sum_to_one_without_loss() {
        for &(g, k, d0, m0) in &[(0.6, 0.2, -0.36, 0usize), (1.4, 0.5, -0.96, 0), (0.9, 0.1, 0.2, 2)] {
            let p = SystemParams::dimensionless(g, k);
            let pr = sideband_probabilities(&p, &gauss(d0, 0.2), m0, Truncation::for_coupling(g, m0)).unwrap();
            let total: f64 = pr.iter().sum();
            assert!((total - 1.0).abs() < 1e-5, "{total}");
        }
    }

    #[test]
    fn single_phonon_probability_at_optimum() {
        // g = 0.7, kappa1 = 0.6, carrier on the polaron-shifted resonance
        let p = SystemParams::dimensionless(0.7, 0.6);
        let pr = sideband_probability(&p, &gauss(-0.49, 0.2), 0, 1, Truncation::for_coupling(0.7, 1)).unwrap();
        assert!((pr - 0.64).abs() < 0.03, "{pr}");
    }

    #[test]
    fn spectrum_integrates_to_flux() {
        let p = SystemParams::dimensionless(0.6, 0.2);
        let s = transmitted_spectrum(&p, &gauss(-0.36, 0.2), 0, GridSpec::Auto, Truncation::new(24).unwrap())
            .unwrap();
        assert!((s.integral() - 1.0).abs() < 2e-3, "{}", s.integral());
        assert!(s.values.iter().all(|&v| v >= 0.0));
    }

    /// Interference minima are pulled off the bare resonances by the
    /// off-resonant intermediate levels; the pull stays below `kappa1 / 8`.
    #[test]
    fn dips_sit_near_resonances() {
        for &g in &[0.4, 0.6, 1.0] {
            let p = SystemParams::dimensionless(g, 0.2);
            let f = gauss(-g * g, 0.2);
            let s = transmitted_spectrum(&p, &f, 0, GridSpec::Auto, Truncation::for_coupling(g, 0)).unwrap();
            let minima = s.local_minima();
            let pull = 0.2 / 8.0;
            for dip in super::super::dip_positions(&p, 0, 4) {
                if f.intensity(dip) < 1e-3 * f.intensity(-g * g) {
                    continue;
                }
                assert!(
                    minima.iter().any(|&i| (s.dw[i] - dip).abs() <= pull),
                    "g={g}: no minimum near {dip}"
                );
            }
        }
    }

    #[test]
    fn blue_sideband_needs_an_initial_phonon() {
        let p = SystemParams::dimensionless(0.6, 0.2);
        let f = gauss(-0.36, 0.2);
        let t = Truncation::for_coupling(0.6, 1);
        let cold = transmitted_spectrum(&p, &f, 0, GridSpec::Auto, t).unwrap();
        let hot = transmitted_spectrum(&p, &f, 1, GridSpec::Auto, t).unwrap();
        let blue = |s: &Spectrum<f64>| s.bin_weight(-0.36 + 1.0, 0.5) / s.integral();
        assert!(blue(&cold) < 1e-3, "{}", blue(&cold));
        assert!(blue(&hot) > 1e-2, "{}", blue(&hot));
    }

    #[test]
    fn tabulated_input_is_linear_in_intensity() {
        let p = SystemParams::dimensionless(0.6, 0.2);
        let t = Truncation::new(20).unwrap();
        let omega: Vec<f64> = (0..=40).map(|i| -0.76 + 0.02 * i as f64).collect();
        let amp: Vec<f64> = omega.iter().map(|w| (-(w + 0.36f64).powi(2) / 0.04).exp()).collect();
        let whole = SpectralDensity::tabulated(omega.clone(), amp.clone()).unwrap();
        let grid = GridSpec::Uniform { start: -3.0, stop: 0.5, step: 0.01 };
        let s = transmitted_spectrum(&p, &whole, 0, grid, t).unwrap();
        let mut sum = vec![0.0; s.values.len()];
        for k in 0..omega.len() {
            let piece: Vec<f64> = (0..omega.len()).map(|j| if j == k { amp[k] } else { 0.0 }).collect();
            let part = SpectralDensity::tabulated(omega.clone(), piece).unwrap();
            let sp = transmitted_spectrum(&p, &part, 0, grid, t).unwrap();
            for (a, b) in sum.iter_mut().zip(&sp.values) {
                *a += b;
            }
        }
        for (a, b) in sum.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let p = SystemParams::dimensionless(0.6, 0.2);
        let f = SpectralDensity::tabulated(vec![0.0, 3.0], vec![1.0, 1.0]).unwrap();
        assert!(sideband_probabilities(&p, &f, 0, Truncation::new(16).unwrap()).is_err());
    }
}
