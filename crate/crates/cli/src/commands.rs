//! The five commands. Each maps a resolved [`RunConfig`] to a
//! [`ResultBundle`]; rows are always produced in grid order.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde_json::{json, Value};

use optomech::dynamics::{output_spectrum_me, InitialMechanics, PulseShape, SpectrumOptions};
use optomech::model::{converge_truncation, displacement_matrix, franck_condon, SystemParams, Truncation};
use optomech::noon::{
    bath_occupation, noon_fidelity_with, noon_probability, probability_heatmap, Environment, FrequencyConvention,
    NoonSetup, TwoArmOptions,
};
use optomech::transport::{
    dip_positions, sideband_probabilities, transmitted_spectrum, GridSpec, SpectralDensity, Spectrum, Transport,
};

use crate::config::{Initial, Route, RunConfig};
use crate::output::{Convergence, ResultBundle};
use crate::CliError;

/// Largest phonon truncation the automatic rules may grow to.
const MAX_PHONON_DIM: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Transmission,
    Spectrum,
    NoonSweep,
    Fidelity,
    Selfcheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Transmission => "transmission",
            Command::Spectrum => "spectrum",
            Command::NoonSweep => "noon-sweep",
            Command::Fidelity => "fidelity",
            Command::Selfcheck => "selfcheck",
        }
    }
}

/// Runs `cmd` on a worker pool of `cfg.workers` threads.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("workers = {}: {e}", cfg.workers)))?;
    pool.install(|| match cmd {
        Command::Transmission => transmission(cfg),
        Command::Spectrum => match cfg.route {
            Route::Analytic => spectrum_analytic(cfg),
            Route::Me => spectrum_me(cfg),
        },
        Command::NoonSweep => noon_sweep(cfg),
        Command::Fidelity => fidelity(cfg),
        Command::Selfcheck => selfcheck(cfg),
    })
}

fn params(cfg: &RunConfig) -> SystemParams<f64> {
    SystemParams::dimensionless(cfg.g, cfg.kappa1).with_kappa0(cfg.kappa0).with_bath(cfg.gamma_m, cfg.n_th)
}

fn uniform(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

fn grid(cfg: &RunConfig) -> Option<(f64, f64, f64)> {
    match (cfg.grid_start, cfg.grid_stop, cfg.grid_step) {
        (Some(a), Some(b), Some(h)) => Some((a, b, h)),
        _ => None,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Picks the truncation. An explicit `m` is checked against `m + 4`; the
/// automatic rule grows from `start` until `observe` settles.
fn settle(
    cfg: &RunConfig,
    start: Truncation,
    measure: &str,
    mut observe: impl FnMut(Truncation) -> Result<Vec<f64>, CliError>,
) -> Result<Convergence, CliError> {
    let (phonon_dim, drift, converged) = match cfg.m {
        Some(m) => {
            let t = Truncation::new(m)?;
            let a = observe(t)?;
            let b = observe(t.grown(4))?;
            let drift = max_abs_diff(&a, &b);
            (m, drift, drift < cfg.trunc_tol)
        }
        None => {
            let (_, r) = converge_truncation(start, cfg.trunc_tol, MAX_PHONON_DIM, &mut observe)?;
            (r.phonon_dim, r.drift, r.converged)
        }
    };
    let report = Convergence { phonon_dim, measure: measure.into(), drift, tolerance: cfg.trunc_tol, converged };
    if !converged {
        return Err(CliError::Numerical(format!(
            "truncation M = {phonon_dim} not converged: {measure} moved by {drift:e} under M -> M + 4 \
             (tolerance {:e}); raise m or trunc_tol",
            cfg.trunc_tol
        )));
    }
    Ok(report)
}

/// `t_m` over a detuning grid (or at the single `delta0`).
pub fn transmission(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let p = params(cfg);
    let detunings = match grid(cfg) {
        Some((a, b, h)) => uniform(a, b, h),
        None => vec![cfg.delta0.resolve(p.delta_om()).unwrap_or(-p.delta_om())],
    };
    let reach = detunings.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let start = Truncation::for_transport(cfg.g, cfg.m0, reach);
    let keep = start.phonon_dim().min(cfg.m.unwrap_or(usize::MAX));
    let observe = |t: Truncation| -> Result<Vec<f64>, CliError> {
        let tr = Transport::new(&p, cfg.m0, t)?;
        let mut probs = vec![0.0; t.phonon_dim()];
        let mut out = Vec::with_capacity(detunings.len() * keep);
        for &d0 in &detunings {
            tr.probabilities_into(d0, &mut probs);
            out.extend_from_slice(&probs[..keep]);
        }
        Ok(out)
    };
    let conv = settle(cfg, start, "|t_m|^2 over the detuning grid", observe)?;
    let trunc = Truncation::new(conv.phonon_dim)?;
    let tr = Transport::new(&p, cfg.m0, trunc)?;

    let mut b = ResultBundle::new("transmission", vec!["delta0_over_wM", "m", "re_t", "im_t", "T_m", "sum_T"]);
    let mut worst = 0.0f64;
    let mut t_m0 = Vec::with_capacity(detunings.len());
    for &d0 in &detunings {
        let set = tr.transmission_set(d0);
        let total = set.flux();
        worst = worst.max((total - 1.0).abs());
        t_m0.push(set.amplitudes[cfg.m0].norm_sqr());
        for (m, a) in set.amplitudes.iter().enumerate() {
            b.rows.push(vec![d0, m as f64, a.re, a.im, a.norm_sqr(), total]);
        }
    }
    let lo = detunings[0];
    let dips: Vec<f64> = dip_positions(&p, cfg.m0, conv.phonon_dim)
        .into_iter()
        .filter(|&x| x >= lo && x <= reach)
        .collect();
    let minima: Vec<f64> = (1..t_m0.len().saturating_sub(1))
        .filter(|&i| t_m0[i] < t_m0[i - 1] && t_m0[i] <= t_m0[i + 1])
        .map(|i| detunings[i])
        .collect();
    b.meta.insert("dip_positions".into(), json!(dips));
    b.meta.insert("local_minima_T_m0".into(), json!(minima));
    b.meta.insert("max_flux_deviation".into(), json!(worst));
    b.convergence = Some(conv);
    Ok(b)
}

fn spectrum_rows(b: &mut ResultBundle, s: &Spectrum<f64>) {
    b.rows = s.dw.iter().zip(&s.values).map(|(&w, &v)| vec![w, v]).collect();
    b.meta.insert("integral".into(), json!(s.integral()));
    b.meta.insert("normalization".into(), json!("S integrates to the transmitted photon number over dw"));
}

fn analytic_spectrum(cfg: &RunConfig, delta0: f64, grid: GridSpec<f64>) -> Result<(Spectrum<f64>, Convergence), CliError> {
    let p = params(cfg);
    let input = SpectralDensity::gaussian(delta0, cfg.d)?;
    let start = Truncation::for_transport(cfg.g, cfg.m0, delta0);
    let keep = start.phonon_dim().min(cfg.m.unwrap_or(usize::MAX));
    let conv = settle(cfg, start, "sideband probabilities P_m", |t| {
        Ok(sideband_probabilities(&p, &input, cfg.m0, t)?[..keep].to_vec())
    })?;
    let s = transmitted_spectrum(&p, &input, cfg.m0, grid, Truncation::new(conv.phonon_dim)?)?;
    Ok((s, conv))
}

fn spectrum_grid(cfg: &RunConfig) -> GridSpec<f64> {
    match grid(cfg) {
        Some((start, stop, step)) => GridSpec::Uniform { start, stop, step },
        None => GridSpec::Auto,
    }
}

pub fn spectrum_analytic(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let p = params(cfg);
    let delta0 = cfg.delta0.resolve(p.delta_om()).unwrap_or(-p.delta_om());
    let (s, conv) = analytic_spectrum(cfg, delta0, spectrum_grid(cfg))?;
    let mut b = ResultBundle::new("spectrum", vec!["dw_over_wM", "S"]);
    spectrum_rows(&mut b, &s);
    b.meta.insert("route".into(), json!("analytic"));
    b.meta.insert("delta0".into(), json!(delta0));
    b.meta.insert("blue_sideband_weight".into(), json!(s.bin_weight(delta0 + 1.0, 0.5)));
    b.convergence = Some(conv);
    Ok(b)
}

pub fn spectrum_me(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let p = params(cfg);
    let delta0 = cfg.delta0.resolve(p.delta_om()).unwrap_or(-p.delta_om());
    let (initial, m_hi) = match cfg.initial {
        Initial::Ground => (InitialMechanics::Fock(cfg.m0), cfg.m0),
        Initial::Thermal => (InitialMechanics::Thermal, (8.0 * cfg.n_th).ceil() as usize + 4),
    };
    let trunc = match cfg.m {
        Some(m) => Truncation::new(m)?,
        None => Truncation::for_coupling(cfg.g, m_hi + 4),
    };
    let pulse = PulseShape::new(cfg.d)?;
    let opts = SpectrumOptions { initial, dt: cfg.dt, step: cfg.step, ..Default::default() };
    let me = output_spectrum_me(&p, delta0, &pulse, trunc, spectrum_grid(cfg), &opts)?;
    let edge = *me.populations.last().expect("truncation has levels");
    let conv = Convergence {
        phonon_dim: trunc.phonon_dim(),
        measure: "final population of the top phonon level".into(),
        drift: edge,
        tolerance: cfg.trunc_tol,
        converged: edge < cfg.trunc_tol,
    };
    if !conv.converged {
        return Err(CliError::Numerical(format!(
            "truncation M = {} not converged: top level holds {edge:e} (tolerance {:e}); raise m",
            trunc.phonon_dim(),
            cfg.trunc_tol
        )));
    }
    let mut b = ResultBundle::new("spectrum", vec!["dw_over_wM", "S"]);
    spectrum_rows(&mut b, &me.spectrum);
    b.meta.insert("route".into(), json!("me"));
    b.meta.insert("delta0".into(), json!(delta0));
    b.meta.insert("blue_sideband_weight".into(), json!(me.spectrum.bin_weight(delta0 + 1.0, 0.5)));
    b.meta.insert("emitted_from_correlation".into(), json!(me.correlation.emitted()));
    b.meta.insert("emitted_from_detector".into(), json!(me.flux));
    b.meta.insert("correlation_hermitian_deviation".into(), json!(me.correlation.hermitian_deviation()));
    b.meta.insert("final_populations".into(), json!(me.populations));
    if cfg.initial == Initial::Ground {
        let uniform_grid = GridSpec::Uniform {
            start: me.spectrum.dw[0],
            stop: *me.spectrum.dw.last().expect("non-empty grid"),
            step: me.spectrum.step().max(1e-12),
        };
        let (reference, _) = analytic_spectrum(cfg, delta0, uniform_grid)?;
        if reference.values.len() == me.spectrum.values.len() {
            b.meta.insert("l1_vs_analytic".into(), json!(me.spectrum.l1_distance(&reference)));
        }
    }
    b.convergence = Some(conv);
    Ok(b)
}

pub fn noon_sweep(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let map = probability_heatmap(
        cfg.n,
        (cfg.g_min, cfg.g_max),
        (cfg.kappa_min, cfg.kappa_max),
        (cfg.g_points, cfg.kappa_points),
        cfg.d,
    )?;
    let mut b = ResultBundle::new("noon-sweep", vec!["g_over_wM", "kappa1_over_wM", "P"]);
    for (i, &g) in map.g.iter().enumerate() {
        for (j, &k) in map.kappa1.iter().enumerate() {
            b.rows.push(vec![g, k, map.values[i][j]]);
        }
    }
    let (i, j, v) = map.argmax;
    b.meta.insert("n".into(), json!(cfg.n));
    b.meta.insert("argmax".into(), json!({ "g_over_wM": map.g[i], "kappa1_over_wM": map.kappa1[j], "P": v }));
    Ok(b)
}

pub fn fidelity(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let base = SystemParams::dimensionless(cfg.g, cfg.kappa1).with_kappa0(cfg.kappa0);
    let mut setup = NoonSetup::new(cfg.n, base, cfg.d)?;
    if let Some(d0) = cfg.delta0.resolve(base.delta_om()) {
        setup.delta0 = d0;
    }
    if let Some(m) = cfg.m {
        if m < cfg.n + 8 {
            return Err(CliError::Config(format!("m = {m}: the two-arm run needs m >= n + 8 = {}", cfg.n + 8)));
        }
        setup.trunc = Truncation::new(m)?;
    }
    let p = noon_probability(&setup)?;
    let runs: Vec<(&str, f64)> = match cfg.temperature {
        Some(t) => vec![
            ("ordinary", bath_occupation(cfg.omega_m_hz, t, FrequencyConvention::Ordinary)),
            ("angular", bath_occupation(cfg.omega_m_hz, t, FrequencyConvention::Angular)),
        ],
        None => vec![("given", cfg.n_th)],
    };
    let opts = TwoArmOptions {
        initial: match cfg.initial {
            Initial::Ground => InitialMechanics::Fock(0),
            Initial::Thermal => InitialMechanics::Thermal,
        },
        step: cfg.step,
    };
    let reports = runs
        .par_iter()
        .map(|&(_, n_th)| noon_fidelity_with(&setup, Environment { gamma_m: cfg.gamma_m, n_th }, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let edge = reports.iter().fold(0.0f64, |a, r| a.max(r.edge_population));
    let conv = Convergence {
        phonon_dim: setup.trunc.phonon_dim(),
        measure: "final population of the top phonon level of either arm".into(),
        drift: edge,
        tolerance: cfg.trunc_tol,
        converged: edge < cfg.trunc_tol,
    };
    if !conv.converged {
        return Err(CliError::Numerical(format!(
            "truncation M = {} per arm not converged: top level holds {edge:e} (tolerance {:e}); raise m",
            conv.phonon_dim, cfg.trunc_tol
        )));
    }
    let mut b = ResultBundle::new("fidelity", vec!["N", "P", "p_cond", "F_N", "n_th_used"]);
    for (r, &(_, n_th)) in reports.iter().zip(&runs) {
        b.rows.push(vec![cfg.n as f64, p, r.state.p_cond, r.fidelity, n_th]);
    }
    b.meta.insert("delta0".into(), json!(setup.delta0));
    b.meta.insert("n_th_conventions".into(), json!(runs.iter().map(|r| r.0).collect::<Vec<_>>()));
    b.meta.insert("integrator_step".into(), json!(reports[0].step));
    b.convergence = Some(conv);
    Ok(b)
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

/// Fast invariant suite. Rows: `index, value, tolerance, pass`.
pub fn selfcheck(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();

    let mut flux = 0.0f64;
    for _ in 0..100 {
        let g = rng.gen_range(0.0..2.0);
        let k = rng.gen_range(0.05..1.0);
        let d0 = rng.gen_range(-3.0..3.0);
        let m0 = rng.gen_range(0..3usize);
        let p = SystemParams::dimensionless(g, k);
        let tr = Transport::new(&p, m0, Truncation::for_transport(g, m0, d0))?;
        flux = flux.max((tr.transmission_set(d0).flux() - 1.0).abs());
    }
    checks.push(Check { name: "flux conservation, 100 random parameter sets", value: flux, tolerance: 1e-6 });

    let mut fc = 0.0f64;
    for &beta in &[-2.5f64, -1.3, 0.4, 2.5] {
        let dm = displacement_matrix::<f64>(beta, Truncation::new(90)?)?;
        for m in 0..=20 {
            for n in 0..=20 {
                fc = fc.max((franck_condon::<f64>(m, n, beta)? - dm.matrix[(m, n)].re).abs());
            }
        }
    }
    checks.push(Check { name: "Franck-Condon closed form vs expm, m,n <= 20", value: fc, tolerance: 1e-9 });

    let p1 = noon_probability(&NoonSetup::new(1, SystemParams::dimensionless(0.7, 0.6), 0.2)?)?;
    checks.push(Check { name: "P(1) at g = 0.7, kappa1 = 0.6 vs 0.64", value: (p1 - 0.64).abs(), tolerance: 0.03 });

    let mut setup = NoonSetup::new(1, SystemParams::dimensionless(0.7, 0.6), 0.4)?;
    setup.trunc = Truncation::new(6)?;
    let r = noon_fidelity_with(&setup, Environment { gamma_m: 0.0, n_th: 0.0 }, &TwoArmOptions::default())?;
    checks.push(Check { name: "ideal two-arm N = 1 fidelity defect", value: 1.0 - r.fidelity, tolerance: 1e-6 });

    let mut b = ResultBundle::new("selfcheck", vec!["index", "value", "tolerance", "pass"]);
    let mut names = Vec::new();
    for (i, c) in checks.iter().enumerate() {
        let pass = c.value < c.tolerance;
        b.rows.push(vec![i as f64, c.value, c.tolerance, if pass { 1.0 } else { 0.0 }]);
        names.push(Value::from(c.name));
        if !pass {
            b.failures.push(format!("{}: {:e} >= {:e}", c.name, c.value, c.tolerance));
        }
    }
    b.meta.insert("checks".into(), Value::Array(names));
    Ok(b)
}
