//! Transmitted spectrum from the two-time output correlation, computed by
//! quantum regression on the single-cavity hierarchy.
//!
//! At each grid time `t` the output annihilator `b_out = f(t) a_in +
//! sqrt(kappa1) c` is applied to the hierarchy from the left. That leaves a
//! (vac, cavity) block `Z` and a (vac, vac) block `Y`, propagated to `t' > t`
//! by the same generator:
//!
//! ```text
//! Z(t)  = sqrt(k1) X + f(t) Y10^dag       dZ/dt' = L0 Z - f(t') sqrt(k1) Y
//! Y(t)  = sqrt(k1) Y10 + f(t) R00         dY/dt' = L0 Y
//! G(t', t) = <b_out^dag(t') b_out(t)> = sqrt(k1) Tr Z + f(t') Tr Y
//! ```

use num_traits::Zero;

use super::hierarchy::{Channels, Hierarchy, HierarchySpec, HierarchyState, InitialMechanics, Slots};
use super::{tensor, DynamicsError, PulseShape};
use crate::model::{SystemParams, Truncation};
use crate::numerics::ode::rk4ip_step;
use crate::numerics::NumericsError;
use crate::transport::{GridSpec, Spectrum};
use crate::{CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub initial: InitialMechanics,
    /// Correlation grid spacing. The spectrum is periodic in the output
    /// frequency with period `2 pi / dt`.
    pub dt: f64,
    /// Integrator step; `None` uses the hierarchy default.
    pub step: Option<f64>,
    /// Window after the pulse; `None` uses `10/kappa1 + 10/omega_M`.
    pub ring_down: Option<f64>,
    /// A regression run stops once the pulse is over and its blocks fall
    /// below this size.
    pub cutoff: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { initial: InitialMechanics::Fock(0), dt: 0.25, step: None, ring_down: None, cutoff: 1e-12 }
    }
}

/// Output correlation on a uniform time grid.
#[derive(Clone, Debug)]
pub struct CorrelationGrid {
    pub times: Vec<f64>,
    pub dt: f64,
    /// `C[(i, j)] = <b_out^dag(t_i) b_out(t_j)>`.
    pub correlation: CMatrix,
}

impl CorrelationGrid {
    /// `sum_i C(t_i, t_i) dt`, the emitted photon number.
    pub fn emitted(&self) -> f64 {
        (0..self.times.len()).map(|i| self.correlation[(i, i)].re).sum::<f64>() * self.dt
    }

    /// Largest `|C(t_i, t_j) - C(t_j, t_i)^*|`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.correlation.hermitian_deviation()
    }

    /// `S(dw) = (1/2pi) sum_ij dt^2 exp(-i nu (t_i - t_j)) C(t_i, t_j)` with
    /// `nu = dw - delta0` the offset from the input carrier.
    pub fn spectrum(&self, delta0: f64, dw: &[f64]) -> Vec<f64> {
        let n = self.times.len();
        let lag: Vec<C64> = (0..n)
            .map(|k| (k..n).fold(C64::zero(), |acc, i| acc + self.correlation[(i, i - k)]))
            .collect();
        let norm = self.dt * self.dt / (2.0 * std::f64::consts::PI);
        dw.iter()
            .map(|&w| {
                let nu = w - delta0;
                let step = C64::new(0.0, -nu * self.dt).exp();
                let mut phase = step;
                let mut acc = lag[0].re;
                for r in &lag[1..] {
                    acc += 2.0 * (r * phase).re;
                    phase *= step;
                }
                norm * acc
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct MeSpectrum {
    pub spectrum: Spectrum<f64>,
    pub correlation: CorrelationGrid,
    /// Emitted photon number from the hierarchy's detector accumulator.
    pub flux: f64,
    /// Phonon populations after the ring-down.
    pub populations: Vec<f64>,
}

fn uniform(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

/// Master-equation spectrum of the single cavity.
///
/// `GridSpec::Auto` spans `[delta0 - ceil(4 g^2) - 3, delta0 + m_hi + 2]` in
/// steps of `omega_M / 400`, where `m_hi` is the initial phonon number
/// (`ceil(3 n_th)` for a thermal start).
pub fn output_spectrum_me(
    params: &SystemParams<f64>,
    delta0: f64,
    pulse: &PulseShape,
    trunc: Truncation,
    grid: GridSpec<f64>,
    opts: &SpectrumOptions,
) -> Result<MeSpectrum, DynamicsError> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(DynamicsError::InvalidInput(format!("correlation spacing dt = {} must be positive", opts.dt)));
    }
    let dw = match grid {
        GridSpec::Auto => {
            let reach = (4.0 * params.g * params.g).ceil() + 3.0;
            let m_hi = match opts.initial {
                InitialMechanics::Fock(m) => m as f64,
                InitialMechanics::Thermal => (3.0 * params.n_th).ceil(),
            };
            uniform(delta0 - reach, delta0 + m_hi + 2.0, 1.0 / 400.0)
        }
        GridSpec::Uniform { start, stop, step } => {
            if !(step > 0.0) || !(stop >= start) {
                return Err(DynamicsError::InvalidInput("spectrum grid needs step > 0 and stop >= start".into()));
            }
            uniform(start, stop, step)
        }
    };
    let nyquist = std::f64::consts::PI / opts.dt;
    if dw.iter().any(|w| (w - delta0).abs() >= nyquist) {
        return Err(DynamicsError::InvalidInput(format!(
            "output grid reaches beyond the Nyquist offset {nyquist:.3} of dt = {}",
            opts.dt
        )));
    }
    let spec = HierarchySpec {
        params: *params,
        delta0,
        pulse: *pulse,
        trunc,
        channels: Channels::single(),
        initial: opts.initial,
    };
    let h = Hierarchy::new(spec)?;
    let step = opts.step.unwrap_or_else(|| h.default_step());
    let ring = opts.ring_down.unwrap_or_else(|| PulseShape::ring_down(params.kappa1));
    let n = ((pulse.duration() + ring) / opts.dt).ceil() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * opts.dt).collect();
    let states = h.run(&times, step)?;
    let last = states.last().expect("grid is non-empty");
    let residual = last.cavity_population();
    if residual > super::hierarchy::RING_DOWN_TOL {
        return Err(DynamicsError::RingDownIncomplete { residual });
    }
    let correlation = regression(&h, &states, opts.dt, step, opts.cutoff)?;
    let grid = CorrelationGrid { times, dt: opts.dt, correlation };
    let values = grid.spectrum(delta0, &dw);
    Ok(MeSpectrum {
        spectrum: Spectrum { dw, values },
        correlation: grid,
        flux: last.detected_probability(0),
        populations: last.mechanical_state().diagonal().iter().map(|z| z.re).collect(),
    })
}

/// Regression blocks `[Z, Y]` seeded from the hierarchy at one time.
fn seed(h: &Hierarchy, state: &HierarchyState) -> Vec<C64> {
    let layout = h.layout();
    let nb = layout.block_len();
    let d = layout.mech_dim();
    let slots: Slots = state.slots();
    let sk = C64::new(h.spec().params.kappa1.sqrt(), 0.0);
    let f = C64::new(h.spec().pulse.envelope(state.time), 0.0);
    let mut out = vec![C64::zero(); 2 * nb];
    let (z, y) = out.split_at_mut(nb);
    tensor::axpy(sk, state.block(slots.x(0, 0)), z);
    tensor::axpy_adjoint(d, f, state.block(slots.y(0)), z);
    tensor::axpy(sk, state.block(slots.y(0)), y);
    tensor::axpy(f, state.block(slots.r00()), y);
    out
}

fn regression(
    h: &Hierarchy,
    states: &[HierarchyState],
    dt: f64,
    step: f64,
    cutoff: f64,
) -> Result<CMatrix, DynamicsError> {
    let layout = h.layout();
    let nb = layout.block_len();
    let n = states.len();
    let sk = h.spec().params.kappa1.sqrt();
    let pulse = h.spec().pulse;
    let sectors = [(0usize, 1usize), (0, 0)];
    let substeps = (dt / step).ceil().max(1.0) as usize;
    let hh = dt / substeps as f64;
    let props = h.propagators(0.5 * hh)?;
    let mut flow = |y: &Vec<C64>| h.flow_blocks(&props, &sectors, y);
    let mut rhs = |t: f64, y: &Vec<C64>| {
        let mut out = vec![C64::zero(); y.len()];
        if h.spec().params.gamma_m > 0.0 {
            for k in 0..2 {
                h.thermal_jumps(&y[k * nb..(k + 1) * nb], &mut out[k * nb..(k + 1) * nb]);
            }
        }
        let f = pulse.envelope(t);
        if f != 0.0 {
            tensor::axpy(C64::new(-f * sk, 0.0), &y[nb..], &mut out[..nb]);
        }
        out
    };
    let value = |t: f64, y: &[C64]| {
        sk * tensor::trace(&layout, &y[..nb]) + pulse.envelope(t) * tensor::trace(&layout, &y[nb..])
    };
    let mut c = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut y = seed(h, &states[j]);
        let tj = states[j].time;
        c[(j, j)] = value(tj, &y);
        for i in j + 1..n {
            let t0 = states[i - 1].time;
            for k in 0..substeps {
                y = rk4ip_step(&mut flow, &mut rhs, t0 + hh * k as f64, &y, hh);
            }
            let ti = states[i].time;
            if y.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(NumericsError::NonFinite { time: ti }.into());
            }
            c[(i, j)] = value(ti, &y);
            if ti > pulse.duration() && y[..nb].iter().fold(0.0f64, |m, z| m.max(z.norm())) < cutoff {
                break;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            c[(i, j)] = c[(j, i)].conj();
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::SpectralDensity;

    fn run(g: f64, kappa1: f64, delta0: f64, m: usize, grid: GridSpec<f64>, dt: f64) -> Result<MeSpectrum, DynamicsError> {
        let params = SystemParams::dimensionless(g, kappa1);
        let pulse = PulseShape::new(0.5)?;
        let opts = SpectrumOptions { dt, ..Default::default() };
        output_spectrum_me(&params, delta0, &pulse, Truncation::new(m)?, grid, &opts)
    }

    #[test]
    fn decoupled_spectrum_is_the_input_gaussian() {
        let grid = GridSpec::Uniform { start: -1.7, stop: 2.3, step: 0.01 };
        let out = run(0.0, 1.0, 0.3, 2, grid, 0.25).unwrap();
        let input = SpectralDensity::gaussian(0.3, 0.5).unwrap();
        let peak = input.intensity(0.3);
        let worst = out
            .spectrum
            .dw
            .iter()
            .zip(&out.spectrum.values)
            .map(|(&w, &s)| (s - input.intensity(w)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3 * peak, "worst deviation {worst:e}");
        assert!((out.spectrum.integral() - 1.0).abs() < 1e-3);
        assert!((out.correlation.emitted() - 1.0).abs() < 1e-3);
        assert!((out.flux - 1.0).abs() < 1e-6);
        assert!((out.populations[0] - 1.0).abs() < 1e-9);
        assert!(out.correlation.hermitian_deviation() < 1e-14);
    }

    #[test]
    fn correlation_diagonal_matches_detector_flux() {
        let out = run(0.6, 0.5, -0.36, 8, GridSpec::Auto, 0.25).unwrap();
        assert!((out.correlation.emitted() - out.flux).abs() < 1e-3, "{} vs {}", out.correlation.emitted(), out.flux);
        assert!((out.spectrum.integral() - out.flux).abs() < 1e-2);
        assert!(out.spectrum.values.iter().all(|&v| v > -1e-6));
        let total: f64 = out.populations.iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grid_beyond_nyquist_is_rejected() {
        let grid = GridSpec::Uniform { start: -2.0, stop: 2.0, step: 0.1 };
        assert!(matches!(run(0.0, 1.0, 0.0, 2, grid, 2.0), Err(DynamicsError::InvalidInput(_))));
    }

    #[test]
    fn bad_spacing_and_grid_are_rejected() {
        assert!(matches!(run(0.0, 1.0, 0.0, 2, GridSpec::Auto, 0.0), Err(DynamicsError::InvalidInput(_))));
        let grid = GridSpec::Uniform { start: 1.0, stop: 0.0, step: 0.1 };
        assert!(matches!(run(0.0, 1.0, 0.0, 2, grid, 0.25), Err(DynamicsError::InvalidInput(_))));
    }
}
