//! Heralded mechanical NOON states from two identical cavities sharing one
//! photon.
//!
//! A balanced coupler splits the photon between the two waveguides; a
//! second coupler recombines the outputs onto the `+` and `-` detectors.
//! A count in the `N`-th red sideband at `+` projects the oscillators onto
//! `(|N,0> + |0,N>)/sqrt(2)`.
//!
//! Probabilities come from the closed-form transport route; fidelities
//! from the two-cavity hierarchy.

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{Channels, DynamicsError, Hierarchy, HierarchySpec, HierarchyState, InitialMechanics, PulseShape};
use crate::model::{thermal_nbar, ModelError, SystemParams, Truncation};
use crate::numerics::{fidelity_with_pure, NumericsError};
use crate::transport::{sideband_probability, SpectralDensity, TransportError};
use crate::{CMatrix, C64};

/// Conditioning on a sideband weight below this is refused.
pub const MIN_CONDITIONAL_PROBABILITY: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoonError {
    #[error("invalid NOON setup: {0}")]
    InvalidSetup(String),
    #[error("conditioning on N = {n} has probability {p:e}")]
    ImprobableEvent { n: usize, p: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One run of the protocol: target phonon number, the (shared) arm
/// parameters and the input photon.
#[derive(Clone, Debug, PartialEq)]
pub struct NoonSetup {
    pub n: usize,
    pub params: SystemParams<f64>,
    pub delta0: f64,
    pub pulse: PulseShape,
    /// Phonon levels per arm for the two-cavity run.
    pub trunc: Truncation,
}

impl NoonSetup {
    /// Setup with the detuning from [`detuning_for_target`] and `M = N + 10`.
    pub fn new(n: usize, params: SystemParams<f64>, d: f64) -> Result<Self, NoonError> {
        let delta0 = detuning_for_target(n, &params, d)?;
        Ok(Self { n, params, delta0, pulse: PulseShape::new(d)?, trunc: Truncation::new(n + 10)? })
    }

    pub fn validate(&self) -> Result<(), NoonError> {
        self.params.validate()?;
        if self.n == 0 {
            return Err(NoonError::InvalidSetup("target phonon number N must be at least 1".into()));
        }
        if self.trunc.phonon_dim() <= self.n {
            return Err(NoonError::InvalidSetup(format!(
                "truncation M = {} cannot hold N = {}",
                self.trunc.phonon_dim(),
                self.n
            )));
        }
        Ok(())
    }

    /// `|N::0>` on the joint `M x M` space (arm 1 is the slow index).
    pub fn target_state(&self) -> Vec<C64> {
        let m = self.trunc.phonon_dim();
        let mut psi = vec![C64::new(0.0, 0.0); m * m];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        psi[self.n * m] = C64::new(r, 0.0);
        psi[self.n] = C64::new(r, 0.0);
        psi
    }

    fn analytic_truncation(&self) -> Truncation {
        let g = self.params.g;
        let a = Truncation::for_transport(g, 0, self.delta0);
        let b = Truncation::for_coupling(g, self.n + 4);
        if a.phonon_dim() >= b.phonon_dim() {
            a
        } else {
            b
        }
    }
}

fn analytic_probability(params: &SystemParams<f64>, delta0: f64, d: f64, n: usize, trunc: Truncation) -> Result<f64, NoonError> {
    let input = SpectralDensity::gaussian(delta0, d)?;
    Ok(sideband_probability(params, &input, 0, n, trunc)?)
}

/// Input detuning for target `N`: `-Delta_om` for `N = 1`,
/// `-Delta_om + omega_M` for `N = 5`, otherwise the candidate
/// `-Delta_om + k omega_M`, `k < N`, with the largest closed-form `P(N)`.
pub fn detuning_for_target(n: usize, params: &SystemParams<f64>, d: f64) -> Result<f64, NoonError> {
    if n == 0 {
        return Err(NoonError::InvalidSetup("target phonon number N must be at least 1".into()));
    }
    let base = -params.delta_om();
    match n {
        1 => Ok(base),
        5 => Ok(base + params.omega_m),
        _ => {
            let mut best = (base, f64::NEG_INFINITY);
            for k in 0..n {
                let delta0 = base + k as f64 * params.omega_m;
                let trunc = Truncation::for_transport(params.g, 0, delta0);
                let trunc = trunc.grown((n + 4).saturating_sub(trunc.phonon_dim()));
                let p = analytic_probability(params, delta0, d, n, trunc)?;
                if p > best.1 {
                    best = (delta0, p);
                }
            }
            Ok(best.0)
        }
    }
}

/// Probability that the photon leaves in the `N`-th red sideband, which
/// heralds `|N::0>`. The lossless couplers only redistribute sideband flux
/// between the detectors, so this is the single-arm sideband weight.
pub fn noon_probability(setup: &NoonSetup) -> Result<f64, NoonError> {
    setup.validate()?;
    analytic_probability(&setup.params, setup.delta0, setup.pulse.width(), setup.n, setup.analytic_truncation())
}

/// `P(N)` over a `(g, kappa1)` grid, with the detuning rule applied per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub n: usize,
    pub g: Vec<f64>,
    pub kappa1: Vec<f64>,
    /// `values[i][j]` at `(g[i], kappa1[j])`.
    pub values: Vec<Vec<f64>>,
    /// `(i, j, P)` of the largest cell (first in row-major order on ties).
    pub argmax: (usize, usize, f64),
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64).collect()
}

/// Evaluates `P(N)` on a `resolution.0 x resolution.1` grid spanning
/// `g_range` and `kappa_range` (both ends included). Cells are computed in
/// parallel on the current rayon pool and gathered in grid order.
pub fn probability_heatmap(
    n: usize,
    g_range: (f64, f64),
    kappa_range: (f64, f64),
    resolution: (usize, usize),
    d: f64,
) -> Result<Heatmap, NoonError> {
    if resolution.0 == 0 || resolution.1 == 0 {
        return Err(NoonError::InvalidSetup("heatmap resolution must be positive".into()));
    }
    if !(g_range.0 >= 0.0 && g_range.1 >= g_range.0) || !(kappa_range.0 > 0.0 && kappa_range.1 >= kappa_range.0) {
        return Err(NoonError::InvalidSetup("heatmap needs 0 <= g_lo <= g_hi and 0 < kappa_lo <= kappa_hi".into()));
    }
    let g = linspace(g_range, resolution.0);
    let kappa1 = linspace(kappa_range, resolution.1);
    let cells: Vec<(usize, usize)> =
        (0..g.len()).flat_map(|i| (0..kappa1.len()).map(move |j| (i, j))).collect();
    let flat: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let params = SystemParams::dimensionless(g[i], kappa1[j]);
            if g[i] == 0.0 {
                return Ok(0.0);
            }
            let delta0 = detuning_for_target(n, &params, d)?;
            let trunc = Truncation::for_transport(g[i], 0, delta0);
            let trunc = trunc.grown((n + 4).saturating_sub(trunc.phonon_dim()));
            analytic_probability(&params, delta0, d, n, trunc)
        })
        .collect::<Result<_, NoonError>>()?;
    let values: Vec<Vec<f64>> = flat.chunks(kappa1.len()).map(|row| row.to_vec()).collect();
    let mut argmax = (0, 0, f64::NEG_INFINITY);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > argmax.2 {
                argmax = (i, j, v);
            }
        }
    }
    Ok(Heatmap { n, g, kappa1, values, argmax })
}

/// Options for the two-cavity run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoArmOptions {
    pub initial: InitialMechanics,
    /// Integrator step; `None` uses the hierarchy default.
    pub step: Option<f64>,
}

impl Default for TwoArmOptions {
    fn default() -> Self {
        Self { initial: InitialMechanics::Fock(0), step: None }
    }
}

/// Final state of the two-cavity run.
#[derive(Clone, Debug)]
pub struct TwoArmTrajectory {
    pub spec: HierarchySpec,
    pub step: f64,
    pub last: HierarchyState,
}

impl TwoArmTrajectory {
    /// Joint mechanical state with the optical part traced out.
    pub fn mechanical_state(&self) -> CMatrix {
        self.last.mechanical_state()
    }

    /// Unnormalized mechanical state after a count at `+` (0) or `-` (1).
    pub fn branch(&self, detector: Detector) -> CMatrix {
        self.last.detected(detector as usize)
    }

    pub fn phonon_dim(&self) -> usize {
        self.spec.trunc.phonon_dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detector {
    Plus = 0,
    Minus = 1,
}

/// Integrates the two-cavity hierarchy through the pulse and ring-down.
pub fn simulate_two_arm(setup: &NoonSetup, opts: &TwoArmOptions) -> Result<TwoArmTrajectory, NoonError> {
    setup.validate()?;
    let spec = HierarchySpec {
        params: setup.params,
        delta0: setup.delta0,
        pulse: setup.pulse,
        trunc: setup.trunc,
        channels: Channels::symmetric_pair(),
        initial: opts.initial,
    };
    let h = Hierarchy::new(spec.clone())?;
    let step = opts.step.unwrap_or_else(|| h.default_step());
    let last = h.run(&[h.end_time()], step)?.pop().expect("one sample requested");
    let residual = last.cavity_population();
    if residual > crate::dynamics::RING_DOWN_TOL {
        return Err(DynamicsError::RingDownIncomplete { residual }.into());
    }
    Ok(TwoArmTrajectory { spec, step, last })
}

/// Oscillator state heralded by an `N`-th sideband count.
#[derive(Clone, Debug)]
pub struct ConditionalState {
    pub n: usize,
    pub detector: Detector,
    /// Normalized joint state projected onto total phonon number `N`.
    pub rho: CMatrix,
    /// Weight of the total-`N` subspace summed over both detectors.
    pub p_cond: f64,
    /// Weight of the total-`N` subspace behind `detector`.
    pub p_branch: f64,
}

fn project_total(rho: &CMatrix, m: usize, n: usize) -> CMatrix {
    let keep = |i: usize| i / m + i % m == n;
    CMatrix::from_fn(rho.rows(), rho.cols(), |i, j| if keep(i) && keep(j) { rho[(i, j)] } else { C64::new(0.0, 0.0) })
}

/// Projects the `+` branch onto total phonon number `N` and renormalizes.
pub fn conditional_noon_state(traj: &TwoArmTrajectory, n: usize) -> Result<ConditionalState, NoonError> {
    let m = traj.phonon_dim();
    if n == 0 || n >= m {
        return Err(NoonError::InvalidSetup(format!("N = {n} outside 1..{m}")));
    }
    let plus = project_total(&traj.branch(Detector::Plus), m, n);
    let minus = project_total(&traj.branch(Detector::Minus), m, n);
    let p_branch = plus.trace().re;
    let p_cond = p_branch + minus.trace().re;
    if !(p_branch >= MIN_CONDITIONAL_PROBABILITY) {
        return Err(NoonError::ImprobableEvent { n, p: p_branch });
    }
    let rho = plus.scale_real(1.0 / p_branch);
    let rho = CMatrix::from_fn(rho.rows(), rho.cols(), |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
    Ok(ConditionalState { n, detector: Detector::Plus, rho, p_cond, p_branch })
}

fn edge_population(traj: &TwoArmTrajectory) -> f64 {
    let m = traj.phonon_dim();
    let rho = traj.mechanical_state();
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..m {
        a += rho[((m - 1) * m + k, (m - 1) * m + k)].re;
        b += rho[(k * m + m - 1, k * m + m - 1)].re;
    }
    f64::max(a, b)
}

/// Mechanical bath seen by both arms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Environment {
    pub gamma_m: f64,
    pub n_th: f64,
}

#[derive(Clone, Debug)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub state: ConditionalState,
    pub step: f64,
    /// Largest population of the top phonon level of either arm in the
    /// unconditioned final state; a truncation check.
    pub edge_population: f64,
}

/// `F_N = <N::0| rho_N |N::0>` for the heralded state under `env`.
pub fn noon_fidelity(setup: &NoonSetup, env: Environment) -> Result<FidelityReport, NoonError> {
    noon_fidelity_with(setup, env, &TwoArmOptions::default())
}

pub fn noon_fidelity_with(setup: &NoonSetup, env: Environment, opts: &TwoArmOptions) -> Result<FidelityReport, NoonError> {
    let mut s = setup.clone();
    s.params = s.params.with_bath(env.gamma_m, env.n_th);
    let traj = simulate_two_arm(&s, opts)?;
    let state = conditional_noon_state(&traj, s.n)?;
    let fidelity = fidelity_with_pure(&state.rho, &s.target_state())?;
    Ok(FidelityReport { fidelity, state, step: traj.step, edge_population: edge_population(&traj) })
}

/// How a frequency quoted in hertz maps to the oscillator's angular
/// frequency when computing the bath occupation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrequencyConvention {
    /// `omega = 2 pi f`.
    Ordinary,
    /// The number is already `omega` in rad/s.
    Angular,
}

/// Bath occupation at `temperature` (K) for a mechanical frequency quoted
/// as `freq` (Hz or rad/s per `convention`).
pub fn bath_occupation(freq: f64, temperature: f64, convention: FrequencyConvention) -> f64 {
    let omega = match convention {
        FrequencyConvention::Ordinary => 2.0 * std::f64::consts::PI * freq,
        FrequencyConvention::Angular => freq,
    };
    thermal_nbar(omega, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detuning_rule() {
        let p = SystemParams::dimensionless(0.7, 0.6);
        assert!((detuning_for_target(1, &p, 0.2).unwrap() + 0.49).abs() < 1e-15);
        let p = SystemParams::dimensionless(1.4, 0.5);
        assert!((detuning_for_target(5, &p, 0.2).unwrap() - (1.0 - 1.96)).abs() < 1e-15);
        // scan oracle: P(2) = 0.23238 at k = 0 and 0.25160 at k = 1
        let p = SystemParams::dimensionless(1.0, 0.5);
        assert!((detuning_for_target(2, &p, 0.2).unwrap() - 0.0).abs() < 1e-15);
        assert!(detuning_for_target(0, &p, 0.2).is_err());
    }

    #[test]
    fn decoupled_arms_never_herald() {
        let setup = NoonSetup::new(1, SystemParams::dimensionless(0.0, 0.6), 0.2).unwrap();
        assert!(noon_probability(&setup).unwrap() < 1e-14);
    }

    #[test]
    fn target_state_layout() {
        let setup = NoonSetup::new(2, SystemParams::dimensionless(1.0, 0.5), 0.2).unwrap();
        let psi = setup.target_state();
        let m = setup.trunc.phonon_dim();
        assert_eq!(m, 12);
        let nz: Vec<usize> = psi.iter().enumerate().filter(|(_, z)| z.norm() > 0.0).map(|(i, _)| i).collect();
        assert_eq!(nz, vec![2, 2 * m]);
    }

    #[test]
    fn projection_keeps_total_number() {
        let m = 4;
        let rho = CMatrix::identity(m * m).scale_real(1.0 / 16.0);
        let p = project_total(&rho, m, 2);
        let kept: Vec<usize> = (0..16).filter(|&i| p[(i, i)].re > 0.0).collect();
        assert_eq!(kept, vec![2, 5, 8]);
    }

    #[test]
    fn bath_occupation_conventions() {
        let ord = bath_occupation(1e8, 0.2, FrequencyConvention::Ordinary);
        let ang = bath_occupation(1e8, 0.2, FrequencyConvention::Angular);
        assert!((ord - 41.18).abs() < 0.01, "{ord}");
        assert!((ang - 261.3).abs() < 0.1, "{ang}");
    }

    #[test]
    fn heatmap_rejects_bad_ranges() {
        assert!(probability_heatmap(1, (0.0, 1.0), (0.0, 1.0), (3, 3), 0.2).is_err());
        assert!(probability_heatmap(1, (0.0, 1.0), (0.1, 1.0), (0, 3), 0.2).is_err());
    }
}
