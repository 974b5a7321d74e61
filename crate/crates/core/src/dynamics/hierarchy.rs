//! Block-structured Fock-input hierarchy for one or more cavities.
//!
//! Optical basis: vacuum plus one single-photon state per cavity. Only the
//! blocks a single photon can reach are stored:
//!
//! * `rho11`: the (vac, vac) block and the (s, t) blocks, `s, t` cavities;
//! * `rho10`: the (s, vac) blocks;
//! * `rho00`: the (vac, vac) block;
//! * one (vac, vac) accumulator per detector, holding the unnormalized
//!   mechanical state conditioned on the photon having been counted there.
//!
//! The generator is split as `L0 = A + N`. `A` is the no-jump part,
//! `X(s, t) -> -i (Heff_s X - X Heff_t^dag)`, whose exact flow
//! `U_s X U_t^dag` factorizes into one dense single-mode matrix on the
//! driven cavity's oscillator and diagonal factors elsewhere. `N` holds the
//! quantum jumps and the pulse source terms and is integrated with RK4 in
//! the interaction picture.

use num_traits::Zero;

use super::tensor::{self, Layout, ModeOp};
use super::{DynamicsError, PulseShape};
use crate::model::{SystemParams, Truncation};
use crate::numerics::ode::rk4ip_step;
use crate::numerics::{matrix_exp, NumericsError};
use crate::{CMatrix, C64};

/// Trace tolerance checked at every sample.
const TRACE_TOL: f64 = 1e-5;
const FLUX_FLOOR: f64 = -1e-8;
/// Largest cavity population accepted when reading final mechanics.
pub const RING_DOWN_TOL: f64 = 1e-6;

/// How the input photon is shared among the cavities' waveguides and which
/// output modes are counted.
#[derive(Clone, Debug, PartialEq)]
pub struct Channels {
    /// Input amplitude in each cavity's waveguide (unit norm).
    pub drive: Vec<f64>,
    /// Counted output modes `sum_s u_s b_out,s`.
    pub detectors: Vec<Vec<f64>>,
}

impl Channels {
    pub fn single() -> Self {
        Self { drive: vec![1.0], detectors: vec![vec![1.0]] }
    }

    /// Two cavities fed by a balanced beamsplitter; the outputs are
    /// recombined on a second one whose ports are the `+` and `-` detectors.
    pub fn symmetric_pair() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self { drive: vec![r, r], detectors: vec![vec![r, r], vec![r, -r]] }
    }

    pub fn modes(&self) -> usize {
        self.drive.len()
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let n = self.modes();
        let norm: f64 = self.drive.iter().map(|w| w * w).sum();
        if n == 0 || (norm - 1.0).abs() > 1e-12 || self.detectors.iter().any(|u| u.len() != n) {
            return Err(DynamicsError::InvalidInput(
                "channel drive must be a unit vector and every detector must have one weight per cavity".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialMechanics {
    /// Every oscillator in the number state `|m>`.
    Fock(usize),
    /// Every oscillator thermal at the bath occupation `n_th`.
    Thermal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchySpec {
    pub params: SystemParams<f64>,
    /// Input carrier detuning from the bare cavity; the frame rotates at
    /// the carrier.
    pub delta0: f64,
    pub pulse: PulseShape,
    pub trunc: Truncation,
    pub channels: Channels,
    pub initial: InitialMechanics,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub m0: usize,
    /// Integrator step; `None` picks [`Hierarchy::default_step`].
    pub step: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { m0: 0, step: None }
    }
}

/// Block slots inside the flat state vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) struct Slots {
    modes: usize,
    detectors: usize,
}

impl Slots {
    pub(super) const VAC: usize = 0;
    pub(super) fn x(&self, s: usize, t: usize) -> usize {
        1 + s * self.modes + t
    }
    pub(super) fn y(&self, s: usize) -> usize {
        1 + self.modes * self.modes + s
    }
    pub(super) fn r00(&self) -> usize {
        1 + self.modes * self.modes + self.modes
    }
    pub(super) fn det(&self, u: usize) -> usize {
        self.r00() + 1 + u
    }
    fn count(&self) -> usize {
        self.det(self.detectors)
    }
    /// Optical sectors `(left, right)` of a slot; 0 is vacuum, `s + 1` is
    /// cavity `s`.
    fn sectors(&self, slot: usize) -> (usize, usize) {
        let m = self.modes;
        if slot >= 1 && slot <= m * m {
            let k = slot - 1;
            (k / m + 1, k % m + 1)
        } else if slot > m * m && slot <= m * m + m {
            (slot - m * m, 0)
        } else {
            (0, 0)
        }
    }
}

/// Hierarchy blocks at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyState {
    pub time: f64,
    layout: Layout,
    slots: Slots,
    data: Vec<C64>,
}

impl HierarchyState {
    pub(super) fn block(&self, slot: usize) -> &[C64] {
        let n = self.layout.block_len();
        &self.data[slot * n..(slot + 1) * n]
    }

    fn matrix(&self, slot: usize) -> CMatrix {
        tensor::to_matrix(&self.layout, self.block(slot))
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub(super) fn slots(&self) -> Slots {
        self.slots
    }

    /// Mechanical state of `rho11` with the cavities empty.
    pub fn vacuum_block(&self) -> CMatrix {
        self.matrix(Slots::VAC)
    }

    pub fn cavity_block(&self, s: usize, t: usize) -> CMatrix {
        self.matrix(self.slots.x(s, t))
    }

    pub fn coherence_block(&self, s: usize) -> CMatrix {
        self.matrix(self.slots.y(s))
    }

    pub fn reference(&self) -> CMatrix {
        self.matrix(self.slots.r00())
    }

    /// Unnormalized mechanical state left behind by a count at detector `u`.
    pub fn detected(&self, u: usize) -> CMatrix {
        self.matrix(self.slots.det(u))
    }

    pub fn detected_probability(&self, u: usize) -> f64 {
        tensor::trace(&self.layout, self.block(self.slots.det(u))).re
    }

    pub fn cavity_population(&self) -> f64 {
        (0..self.slots.modes).map(|s| tensor::trace(&self.layout, self.block(self.slots.x(s, s))).re).sum()
    }

    pub fn trace_rho11(&self) -> f64 {
        tensor::trace(&self.layout, self.block(Slots::VAC)).re + self.cavity_population()
    }

    pub fn trace_rho00(&self) -> f64 {
        tensor::trace(&self.layout, self.block(self.slots.r00())).re
    }

    /// `Tr_optical rho11` on the joint mechanical space.
    pub fn mechanical_state(&self) -> CMatrix {
        let mut out = self.vacuum_block();
        for s in 0..self.slots.modes {
            out += &self.cavity_block(s, s);
        }
        out
    }

    fn full(&self, place: impl Fn(usize) -> Option<(usize, usize)>) -> CMatrix {
        let d = self.layout.mech_dim();
        let n = self.layout.optical_dim() * d;
        let mut out = CMatrix::zeros(n, n);
        for slot in 0..self.slots.r00() + 1 {
            if let Some((a, b)) = place(slot) {
                let blk = self.block(slot);
                for i in 0..d {
                    for j in 0..d {
                        out[(a * d + i, b * d + j)] = blk[i * d + j];
                    }
                }
            }
        }
        out
    }

    /// `rho11` on optical x mechanical space, optical index slowest.
    pub fn rho11(&self) -> CMatrix {
        let m = self.slots.modes;
        self.full(|slot| (slot <= m * m).then(|| self.slots.sectors(slot)))
    }

    pub fn rho10(&self) -> CMatrix {
        let m = self.slots.modes;
        self.full(|slot| (slot > m * m && slot <= m * m + m).then(|| self.slots.sectors(slot)))
    }

    pub fn rho00(&self) -> CMatrix {
        let r = self.slots.r00();
        self.full(|slot| (slot == r).then_some((0, 0)))
    }
}

/// Exact no-jump flow over half a step.
pub(super) struct Propagators {
    tau: f64,
    /// `exp(-i tau Heff)` restricted to the oscillator of the cavity that
    /// holds the photon.
    coupled: ModeOp,
    /// Diagonal factor on the joint mechanical space per optical sector.
    diag: Vec<Vec<C64>>,
}

/// Ladder bookkeeping for the thermal jumps on one axis: joint indices that
/// can be lowered (raised) together with `sqrt(k + 1)` (`sqrt(k)`).
struct AxisLadder {
    stride: usize,
    down: Vec<(usize, f64)>,
    up: Vec<(usize, f64)>,
}

/// The generator of one hierarchy.
pub struct Hierarchy {
    spec: HierarchySpec,
    layout: Layout,
    slots: Slots,
    ladders: Vec<AxisLadder>,
    sectors: Vec<(usize, usize)>,
    /// Diagonal of `gamma (n+1) b^dag b + gamma n b b^dag` on one oscillator.
    decay: Vec<f64>,
}

impl Hierarchy {
    pub fn new(spec: HierarchySpec) -> Result<Self, DynamicsError> {
        spec.params.validate()?;
        spec.channels.validate()?;
        if spec.params.omega_m != 1.0 {
            return Err(DynamicsError::InvalidInput("parameters must be in mechanical units (omega_M = 1)".into()));
        }
        let m = spec.trunc.phonon_dim();
        if let InitialMechanics::Fock(k) = spec.initial {
            if k >= m {
                return Err(DynamicsError::InvalidInput(format!("initial phonon number {k} outside truncation {m}")));
            }
        }
        let layout = Layout::new(spec.channels.modes(), m);
        let slots = Slots { modes: layout.modes, detectors: spec.channels.detectors.len() };
        let d = layout.mech_dim();
        let ladders = (0..layout.modes)
            .map(|a| {
                let mut down = Vec::new();
                let mut up = Vec::new();
                for i in 0..d {
                    let k = layout.digit(i, a);
                    if k + 1 < m {
                        down.push((i, ((k + 1) as f64).sqrt()));
                    }
                    if k >= 1 {
                        up.push((i, (k as f64).sqrt()));
                    }
                }
                AxisLadder { stride: layout.stride(a), down, up }
            })
            .collect();
        let p = &spec.params;
        let decay = (0..m)
            .map(|k| {
                let raise = if k + 1 < m { (k + 1) as f64 } else { 0.0 };
                p.gamma_m * (p.n_th + 1.0) * k as f64 + p.gamma_m * p.n_th * raise
            })
            .collect();
        let sectors = (0..slots.count()).map(|k| slots.sectors(k)).collect();
        Ok(Self { spec, layout, slots, ladders, sectors, decay })
    }

    pub fn spec(&self) -> &HierarchySpec {
        &self.spec
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub(super) fn kappa_total(&self) -> f64 {
        self.spec.params.kappa1 + self.spec.params.kappa0
    }

    /// End of the pulse plus ring-down.
    pub fn end_time(&self) -> f64 {
        self.spec.pulse.duration() + PulseShape::ring_down(self.spec.params.kappa1)
    }

    /// `min(0.1 / w_slow, T / 2000)`, with `w_slow` the fastest rate left to
    /// the RK4 part: cavity decay, pulse bandwidth and coupling, thermal jumps.
    pub fn default_step(&self) -> f64 {
        let p = &self.spec.params;
        let m = self.layout.phonon_dim as f64;
        let wmax = self.spec.channels.drive.iter().fold(0.0f64, |a, w| a.max(w.abs()));
        let slow = [
            self.kappa_total(),
            self.spec.pulse.width(),
            p.kappa1.sqrt() * self.spec.pulse.peak() * wmax,
            p.gamma_m * (2.0 * p.n_th + 1.0) * m,
        ]
        .into_iter()
        .fold(1e-12f64, f64::max);
        (0.1 / slow).min(self.spec.pulse.duration() / 2000.0)
    }

    fn initial_mechanics(&self) -> Vec<C64> {
        let m = self.layout.phonon_dim;
        let single: Vec<f64> = match self.spec.initial {
            InitialMechanics::Fock(k) => (0..m).map(|j| if j == k { 1.0 } else { 0.0 }).collect(),
            InitialMechanics::Thermal => {
                let n = self.spec.params.n_th;
                let q = if n > 0.0 { n / (n + 1.0) } else { 0.0 };
                let w: Vec<f64> = (0..m).map(|j| q.powi(j as i32)).collect();
                let z: f64 = w.iter().sum();
                w.into_iter().map(|x| x / z).collect()
            }
        };
        let d = self.layout.mech_dim();
        let mut out = vec![C64::zero(); d * d];
        for i in 0..d {
            let p: f64 = (0..self.layout.modes).map(|a| single[self.layout.digit(i, a)]).product();
            out[i * d + i] = C64::new(p, 0.0);
        }
        out
    }

    pub fn initial_state(&self) -> HierarchyState {
        let n = self.layout.block_len();
        let mut data = vec![C64::zero(); n * self.slots.count()];
        let rho = self.initial_mechanics();
        data[..n].copy_from_slice(&rho);
        let r = self.slots.r00();
        data[r * n..(r + 1) * n].copy_from_slice(&rho);
        HierarchyState { time: 0.0, layout: self.layout, slots: self.slots, data }
    }

    pub(super) fn propagators(&self, tau: f64) -> Result<Propagators, DynamicsError> {
        let m = self.layout.phonon_dim;
        let p = &self.spec.params;
        let i = C64::new(0.0, 1.0);
        let free: Vec<C64> = (0..m)
            .map(|k| (-i * tau * C64::new(k as f64 * p.omega_m, -0.5 * self.decay[k])).exp())
            .collect();
        let shift = C64::new(-self.spec.delta0, -0.5 * self.kappa_total());
        let heff = CMatrix::from_fn(m, m, |r, c| {
            if r == c {
                shift + C64::new(r as f64 * p.omega_m, -0.5 * self.decay[r])
            } else if r + 1 == c {
                C64::new(p.g * (c as f64).sqrt(), 0.0)
            } else if c + 1 == r {
                C64::new(p.g * (r as f64).sqrt(), 0.0)
            } else {
                C64::zero()
            }
        });
        let coupled = ModeOp::from_dense(&matrix_exp(&heff.scale(-i * tau))?);
        let d = self.layout.mech_dim();
        let diag = (0..=self.layout.modes)
            .map(|sector| {
                (0..d)
                    .map(|idx| {
                        (0..self.layout.modes)
                            .filter(|&a| sector != a + 1)
                            .fold(C64::new(1.0, 0.0), |acc, a| acc * free[self.layout.digit(idx, a)])
                    })
                    .collect()
            })
            .collect();
        Ok(Propagators { tau, coupled, diag })
    }

    fn flow(&self, props: &Propagators, y: &[C64]) -> Vec<C64> {
        self.flow_blocks(props, &self.sectors, y)
    }

    /// Applies the exact no-jump flow to consecutive blocks whose optical
    /// sectors are listed in `sectors`.
    pub(super) fn flow_blocks(&self, props: &Propagators, sectors: &[(usize, usize)], y: &[C64]) -> Vec<C64> {
        let n = self.layout.block_len();
        let d = self.layout.mech_dim();
        let mut out = vec![C64::zero(); y.len()];
        let mut a = vec![C64::zero(); n];
        let mut b = vec![C64::zero(); n];
        for (slot, &(l, r)) in sectors.iter().enumerate() {
            let x = &y[slot * n..(slot + 1) * n];
            let mut src = x;
            if l > 0 {
                a.iter_mut().for_each(|v| *v = C64::zero());
                tensor::left_apply(&self.layout, &props.coupled, l - 1, C64::new(1.0, 0.0), src, &mut a);
                src = &a;
            }
            if r > 0 {
                b.iter_mut().for_each(|v| *v = C64::zero());
                tensor::right_apply_adj(&self.layout, &props.coupled, r - 1, C64::new(1.0, 0.0), src, &mut b);
                src = &b;
            }
            let (dl, dr) = (&props.diag[l], &props.diag[r]);
            let dst = &mut out[slot * n..(slot + 1) * n];
            for i in 0..d {
                for j in 0..d {
                    dst[i * d + j] = dl[i] * src[i * d + j] * dr[j].conj();
                }
            }
        }
        out
    }

    pub(super) fn thermal_jumps(&self, x: &[C64], y: &mut [C64]) {
        let p = &self.spec.params;
        let d = self.layout.mech_dim();
        let down_rate = p.gamma_m * (p.n_th + 1.0);
        let up_rate = p.gamma_m * p.n_th;
        for lad in &self.ladders {
            let st = lad.stride;
            if down_rate > 0.0 {
                for &(i, si) in &lad.down {
                    let row = &x[(i + st) * d..(i + st + 1) * d];
                    let c = down_rate * si;
                    let yr = &mut y[i * d..(i + 1) * d];
                    for &(j, sj) in &lad.down {
                        yr[j] += row[j + st] * (c * sj);
                    }
                }
            }
            if up_rate > 0.0 {
                for &(i, si) in &lad.up {
                    let row = &x[(i - st) * d..(i - st + 1) * d];
                    let c = up_rate * si;
                    let yr = &mut y[i * d..(i + 1) * d];
                    for &(j, sj) in &lad.up {
                        yr[j] += row[j - st] * (c * sj);
                    }
                }
            }
        }
    }

    /// Jump and source terms of the generator.
    fn jumps_and_sources(&self, t: f64, y: &[C64]) -> Vec<C64> {
        let n = self.layout.block_len();
        let d = self.layout.mech_dim();
        let modes = self.slots.modes;
        let blk = |slot: usize| &y[slot * n..(slot + 1) * n];
        let mut out = vec![C64::zero(); y.len()];
        let p = &self.spec.params;
        if p.gamma_m > 0.0 {
            for slot in 0..self.slots.count() {
                let (src, dst) = (blk(slot), slot * n);
                self.thermal_jumps(src, &mut out[dst..dst + n]);
            }
        }
        let w = &self.spec.channels.drive;
        let sk = p.kappa1.sqrt();
        let f = self.spec.pulse.envelope(t);
        let a = C64::new(f * sk, 0.0);
        {
            let vac = &mut out[..n];
            for s in 0..modes {
                tensor::axpy(C64::new(self.kappa_total(), 0.0), blk(self.slots.x(s, s)), vac);
                if f != 0.0 {
                    tensor::axpy(a * w[s], blk(self.slots.y(s)), vac);
                    tensor::axpy_adjoint(d, a * w[s], blk(self.slots.y(s)), vac);
                }
            }
        }
        if f != 0.0 {
            for s in 0..modes {
                for t2 in 0..modes {
                    let o = self.slots.x(s, t2) * n;
                    let dst = &mut out[o..o + n];
                    tensor::axpy_adjoint(d, -a * w[s], blk(self.slots.y(t2)), dst);
                    tensor::axpy(-a * w[t2], blk(self.slots.y(s)), dst);
                }
                let o = self.slots.y(s) * n;
                tensor::axpy(-a * w[s], blk(self.slots.r00()), &mut out[o..o + n]);
            }
        }
        for (u, weights) in self.spec.channels.detectors.iter().enumerate() {
            let o = self.slots.det(u) * n;
            let dst = &mut out[o..o + n];
            self.add_detector_rate(weights, f, y, dst);
        }
        out
    }

    /// `b_out,u rho b_out,u^dag` in hierarchy form, added into `dst`.
    fn add_detector_rate(&self, u: &[f64], f: f64, y: &[C64], dst: &mut [C64]) {
        let n = self.layout.block_len();
        let d = self.layout.mech_dim();
        let blk = |slot: usize| &y[slot * n..(slot + 1) * n];
        let k1 = self.spec.params.kappa1;
        let w = &self.spec.channels.drive;
        let overlap: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
        for s in 0..self.slots.modes {
            for t in 0..self.slots.modes {
                let c = k1 * u[s] * u[t];
                if c != 0.0 {
                    tensor::axpy(C64::new(c, 0.0), blk(self.slots.x(s, t)), dst);
                }
            }
        }
        if f != 0.0 && overlap != 0.0 {
            let a = C64::new(f * overlap * k1.sqrt(), 0.0);
            for s in 0..self.slots.modes {
                tensor::axpy(a * u[s], blk(self.slots.y(s)), dst);
                tensor::axpy_adjoint(d, a * u[s], blk(self.slots.y(s)), dst);
            }
            tensor::axpy(C64::new(f * f * overlap * overlap, 0.0), blk(self.slots.r00()), dst);
        }
    }

    /// Photon flux into each detector at the state's time.
    pub fn detector_flux(&self, state: &HierarchyState) -> Vec<f64> {
        let n = self.layout.block_len();
        let f = self.spec.pulse.envelope(state.time);
        self.spec
            .channels
            .detectors
            .iter()
            .map(|u| {
                let mut j = vec![C64::zero(); n];
                self.add_detector_rate(u, f, &state.data, &mut j);
                tensor::trace(&self.layout, &j).re
            })
            .collect()
    }

    /// Integrates from `t = 0` and returns the state at each sample time
    /// (ascending, non-negative).
    pub fn run(&self, samples: &[f64], step: f64) -> Result<Vec<HierarchyState>, DynamicsError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(DynamicsError::InvalidInput(format!("integrator step {step} must be positive")));
        }
        if samples.windows(2).any(|w| !(w[1] >= w[0])) || samples.first().is_some_and(|&t| t < 0.0) {
            return Err(DynamicsError::InvalidInput("sample times must be ascending and non-negative".into()));
        }
        let mut state = self.initial_state();
        let mut out = Vec::with_capacity(samples.len());
        let mut props: Option<Propagators> = None;
        for &ts in samples {
            let span = ts - state.time;
            if span > 0.0 {
                let steps = (span / step).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                if props.as_ref().map_or(true, |p| p.tau != 0.5 * h) {
                    props = Some(self.propagators(0.5 * h)?);
                }
                let pr = props.as_ref().expect("set above");
                let mut flow = |y: &Vec<C64>| self.flow(pr, y);
                let mut rhs = |t: f64, y: &Vec<C64>| self.jumps_and_sources(t, y);
                let t0 = state.time;
                for k in 0..steps {
                    let t = t0 + h * k as f64;
                    state.data = rk4ip_step(&mut flow, &mut rhs, t, &state.data, h);
                }
                if state.data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(NumericsError::NonFinite { time: ts }.into());
                }
                state.time = ts;
            }
            self.check(&state)?;
            out.push(state.clone());
        }
        Ok(out)
    }

    fn check(&self, state: &HierarchyState) -> Result<(), DynamicsError> {
        let drift = (state.trace_rho11() - 1.0).abs().max((state.trace_rho00() - 1.0).abs());
        if !(drift <= TRACE_TOL) {
            return Err(DynamicsError::TraceDrift { time: state.time, drift });
        }
        for flux in self.detector_flux(state) {
            if flux < FLUX_FLOOR {
                return Err(DynamicsError::NegativeFlux { time: state.time, flux });
            }
        }
        Ok(())
    }
}

/// Sampled single-cavity run.
#[derive(Clone, Debug)]
pub struct HierarchyTrajectory {
    pub spec: HierarchySpec,
    pub step: f64,
    pub states: Vec<HierarchyState>,
    /// Output photon flux at each sample.
    pub flux: Vec<f64>,
}

/// Integrates the single-cavity hierarchy through the pulse and ring-down.
///
/// `t_grid` lists the sample times; empty means only the end of the
/// ring-down. The last sample should lie past the ring-down if final
/// populations are wanted.
pub fn evolve_hierarchy(
    params: &SystemParams<f64>,
    delta0: f64,
    pulse: &PulseShape,
    trunc: Truncation,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<HierarchyTrajectory, DynamicsError> {
    let spec = HierarchySpec {
        params: *params,
        delta0,
        pulse: *pulse,
        trunc,
        channels: Channels::single(),
        initial: InitialMechanics::Fock(opts.m0),
    };
    let h = Hierarchy::new(spec.clone())?;
    let step = opts.step.unwrap_or_else(|| h.default_step());
    let end = [h.end_time()];
    let samples = if t_grid.is_empty() { &end[..] } else { t_grid };
    let states = h.run(samples, step)?;
    let flux = states.iter().map(|s| h.detector_flux(s)[0]).collect();
    Ok(HierarchyTrajectory { spec, step, states, flux })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluxReport {
    pub times: Vec<f64>,
    pub flux: Vec<f64>,
    /// Photon number emitted into the waveguide up to the last sample.
    pub total: f64,
}

pub fn output_flux(traj: &HierarchyTrajectory) -> FluxReport {
    let total = traj.states.last().map_or(0.0, |s| s.detected_probability(0));
    FluxReport { times: traj.states.iter().map(|s| s.time).collect(), flux: traj.flux.clone(), total }
}

/// Phonon populations `<m| Tr_optical rho11 |m>` at the last sample (joint
/// basis for several oscillators).
pub fn final_sideband_populations(traj: &HierarchyTrajectory) -> Result<Vec<f64>, DynamicsError> {
    let last = traj
        .states
        .last()
        .ok_or_else(|| DynamicsError::InvalidInput("empty trajectory".into()))?;
    let residual = last.cavity_population();
    if residual > RING_DOWN_TOL {
        return Err(DynamicsError::RingDownIncomplete { residual });
    }
    Ok(last.mechanical_state().diagonal().iter().map(|z| z.re).collect())
}
