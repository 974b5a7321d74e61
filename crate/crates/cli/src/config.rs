//! Run configuration: a flat `key=value` file, overridden by command-line
//! flags, resolved against documented defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::CliError;

/// Input carrier detuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum Delta0 {
    /// `-Delta_om` for spectra and transmission; the target rule for NOON runs.
    Auto,
    /// `-Delta_om + k omega_M`.
    Dom(f64),
    Value(f64),
}

impl Delta0 {
    pub fn resolve(&self, delta_om: f64) -> Option<f64> {
        match *self {
            Delta0::Auto => None,
            Delta0::Dom(k) => Some(-delta_om + k),
            Delta0::Value(v) => Some(v),
        }
    }
}

impl FromStr for Delta0 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "auto" {
            return Ok(Delta0::Auto);
        }
        if let Some(rest) = s.strip_prefix("dom") {
            let k = match rest.strip_prefix(':') {
                Some(k) => k.parse::<f64>().map_err(|e| format!("`{s}`: {e}"))?,
                None if rest.is_empty() => 0.0,
                None => return Err(format!("`{s}`: expected dom or dom:<k>")),
            };
            return Ok(Delta0::Dom(k));
        }
        s.parse::<f64>().map(Delta0::Value).map_err(|_| format!("`{s}`: expected auto, dom:<k> or a number"))
    }
}

impl fmt::Display for Delta0 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta0::Auto => write!(f, "auto"),
            Delta0::Dom(k) => write!(f, "dom:{k}"),
            Delta0::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Analytic,
    Me,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    Ground,
    Thermal,
}

/// Fully resolved configuration. Frequencies and rates are in units of
/// `omega_M`; `temperature` is in kelvin and `omega_m_hz` in hertz.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub g: f64,
    pub kappa1: f64,
    pub kappa0: f64,
    pub gamma_m: f64,
    pub n_th: f64,
    /// When set, `n_th` is replaced by the bath occupation at this
    /// temperature under both frequency conventions.
    pub temperature: Option<f64>,
    pub omega_m_hz: f64,
    pub delta0: Delta0,
    pub d: f64,
    pub m0: usize,
    pub n: usize,
    /// Phonon levels per oscillator; `None` picks a converged value.
    pub m: Option<usize>,
    pub grid_start: Option<f64>,
    pub grid_stop: Option<f64>,
    pub grid_step: Option<f64>,
    pub route: Route,
    /// Integrator step of the master-equation runs; `None` is automatic.
    pub step: Option<f64>,
    /// Correlation grid spacing of the master-equation spectrum.
    pub dt: f64,
    pub initial: Initial,
    pub g_min: f64,
    pub g_max: f64,
    pub g_points: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub kappa_points: usize,
    /// Largest observable change accepted when growing the truncation.
    pub trunc_tol: f64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            g: 0.6,
            kappa1: 0.2,
            kappa0: 0.0,
            gamma_m: 0.0,
            n_th: 0.0,
            temperature: None,
            omega_m_hz: 1e8,
            delta0: Delta0::Auto,
            d: 0.2,
            m0: 0,
            n: 1,
            m: None,
            grid_start: None,
            grid_stop: None,
            grid_step: None,
            route: Route::Analytic,
            step: None,
            dt: 0.25,
            initial: Initial::Ground,
            g_min: 0.0,
            g_max: 2.0,
            g_points: 41,
            kappa_min: 0.05,
            kappa_max: 1.2,
            kappa_points: 24,
            trunc_tol: 1e-6,
            workers: 0,
            seed: 1,
        }
    }
}

/// Every accepted key, in the order the resolved config is written.
pub const KEYS: &[&str] = &[
    "g",
    "kappa1",
    "kappa0",
    "gamma_m",
    "n_th",
    "temperature",
    "omega_m_hz",
    "delta0",
    "d",
    "m0",
    "n",
    "m",
    "grid_start",
    "grid_stop",
    "grid_step",
    "route",
    "step",
    "dt",
    "initial",
    "g_min",
    "g_max",
    "g_points",
    "kappa_min",
    "kappa_max",
    "kappa_points",
    "trunc_tol",
    "workers",
    "seed",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| CliError::Config(format!("{key} = `{value}`: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    if value.trim() == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), |x| x.to_string())
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got `{line}`", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults overridden by `pairs` in order (later pairs win).
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "g" => self.g = parse(key, value)?,
            "kappa1" => self.kappa1 = parse(key, value)?,
            "kappa0" => self.kappa0 = parse(key, value)?,
            "gamma_m" => self.gamma_m = parse(key, value)?,
            "n_th" => self.n_th = parse(key, value)?,
            "temperature" => self.temperature = parse_opt(key, value)?,
            "omega_m_hz" => self.omega_m_hz = parse(key, value)?,
            "delta0" => self.delta0 = parse(key, value)?,
            "d" => self.d = parse(key, value)?,
            "m0" => self.m0 = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "m" => self.m = parse_opt(key, value)?,
            "grid_start" => self.grid_start = parse_opt(key, value)?,
            "grid_stop" => self.grid_stop = parse_opt(key, value)?,
            "grid_step" => self.grid_step = parse_opt(key, value)?,
            "route" => {
                self.route = match value.trim() {
                    "analytic" => Route::Analytic,
                    "me" => Route::Me,
                    other => return Err(CliError::Config(format!("route = `{other}`: expected analytic or me"))),
                }
            }
            "step" => self.step = parse_opt(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "initial" => {
                self.initial = match value.trim() {
                    "ground" => Initial::Ground,
                    "thermal" => Initial::Thermal,
                    other => return Err(CliError::Config(format!("initial = `{other}`: expected ground or thermal"))),
                }
            }
            "g_min" => self.g_min = parse(key, value)?,
            "g_max" => self.g_max = parse(key, value)?,
            "g_points" => self.g_points = parse(key, value)?,
            "kappa_min" => self.kappa_min = parse(key, value)?,
            "kappa_max" => self.kappa_max = parse(key, value)?,
            "kappa_points" => self.kappa_points = parse(key, value)?,
            "trunc_tol" => self.trunc_tol = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key `{key}` (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "g" => self.g.to_string(),
            "kappa1" => self.kappa1.to_string(),
            "kappa0" => self.kappa0.to_string(),
            "gamma_m" => self.gamma_m.to_string(),
            "n_th" => self.n_th.to_string(),
            "temperature" => show(&self.temperature),
            "omega_m_hz" => self.omega_m_hz.to_string(),
            "delta0" => self.delta0.to_string(),
            "d" => self.d.to_string(),
            "m0" => self.m0.to_string(),
            "n" => self.n.to_string(),
            "m" => show(&self.m),
            "grid_start" => show(&self.grid_start),
            "grid_stop" => show(&self.grid_stop),
            "grid_step" => show(&self.grid_step),
            "route" => match self.route {
                Route::Analytic => "analytic".into(),
                Route::Me => "me".into(),
            },
            "step" => show(&self.step),
            "dt" => self.dt.to_string(),
            "initial" => match self.initial {
                Initial::Ground => "ground".into(),
                Initial::Thermal => "thermal".into(),
            },
            "g_min" => self.g_min.to_string(),
            "g_max" => self.g_max.to_string(),
            "g_points" => self.g_points.to_string(),
            "kappa_min" => self.kappa_min.to_string(),
            "kappa_max" => self.kappa_max.to_string(),
            "kappa_points" => self.kappa_points.to_string(),
            "trunc_tol" => self.trunc_tol.to_string(),
            "workers" => self.workers.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// The resolved config in the input file format. `f64` values use the
    /// shortest representation that parses back to the same number.
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k}={}\n", self.get(k).expect("every key has a value"))).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        fn bad(key: &str, v: impl fmt::Display, why: &str) -> CliError {
            CliError::Config(format!("{key} = {v}: {why}"))
        }
        let finite = |key: &str, v: f64| if v.is_finite() { Ok(()) } else { Err(bad(key, v, "must be finite")) };
        for (k, v) in [("g", self.g), ("kappa1", self.kappa1), ("kappa0", self.kappa0), ("gamma_m", self.gamma_m)] {
            finite(k, v)?;
        }
        if !(0.0..=4.0).contains(&self.g) {
            return Err(bad("g", self.g, "must lie in [0, 4] (units of omega_M)"));
        }
        if !(0.0..=10.0).contains(&self.kappa1) {
            return Err(bad("kappa1", self.kappa1, "must lie in [0, 10]"));
        }
        if !(0.0..=10.0).contains(&self.kappa0) {
            return Err(bad("kappa0", self.kappa0, "must lie in [0, 10]"));
        }
        if !(0.0..=1.0).contains(&self.gamma_m) {
            return Err(bad("gamma_m", self.gamma_m, "must lie in [0, 1]"));
        }
        if !(self.n_th >= 0.0 && self.n_th <= 1e4) {
            return Err(bad("n_th", self.n_th, "must lie in [0, 1e4]"));
        }
        if let Some(t) = self.temperature {
            if !(t > 0.0 && t.is_finite()) {
                return Err(bad("temperature", t, "must be positive (kelvin)"));
            }
        }
        if !(self.omega_m_hz > 0.0 && self.omega_m_hz.is_finite()) {
            return Err(bad("omega_m_hz", self.omega_m_hz, "must be positive"));
        }
        match self.delta0 {
            Delta0::Value(v) | Delta0::Dom(v) if !(v.is_finite() && v.abs() <= 50.0) => {
                return Err(bad("delta0", self.delta0, "must be finite with |value| <= 50"));
            }
            _ => {}
        }
        if !(self.d > 0.0 && self.d <= 5.0) {
            return Err(bad("d", self.d, "must lie in (0, 5]"));
        }
        if self.m0 > 50 {
            return Err(bad("m0", self.m0, "must be at most 50"));
        }
        if !(1..=20).contains(&self.n) {
            return Err(bad("n", self.n, "must lie in 1..=20"));
        }
        if let Some(m) = self.m {
            if !(2..=200).contains(&m) {
                return Err(bad("m", m, "must lie in 2..=200"));
            }
        }
        let grid = [self.grid_start, self.grid_stop, self.grid_step];
        let set = grid.iter().filter(|x| x.is_some()).count();
        if set != 0 && set != 3 {
            return Err(CliError::Config("grid_start, grid_stop and grid_step must be given together".into()));
        }
        if let [Some(a), Some(b), Some(h)] = grid {
            if !(a.is_finite() && b.is_finite() && b >= a) {
                return Err(bad("grid_stop", b, "must be finite and >= grid_start"));
            }
            if !(h > 0.0) || (b - a) / h > 1e6 {
                return Err(bad("grid_step", h, "must be positive with at most 1e6 grid points"));
            }
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h <= 1.0) {
                return Err(bad("step", h, "must lie in (0, 1]"));
            }
        }
        if !(self.dt > 0.0 && self.dt <= 2.0) {
            return Err(bad("dt", self.dt, "must lie in (0, 2]"));
        }
        if !(0.0 <= self.g_min && self.g_min <= self.g_max && self.g_max <= 2.0) {
            return Err(bad("g_max", self.g_max, "sweep needs 0 <= g_min <= g_max <= 2"));
        }
        if !(0.0 < self.kappa_min && self.kappa_min <= self.kappa_max && self.kappa_max <= 1.2) {
            return Err(bad("kappa_max", self.kappa_max, "sweep needs 0 < kappa_min <= kappa_max <= 1.2"));
        }
        if self.g_points == 0 || self.kappa_points == 0 {
            return Err(bad("g_points", self.g_points, "sweep needs at least one point per axis"));
        }
        if self.g_points.saturating_mul(self.kappa_points) > 10_000 {
            return Err(bad("kappa_points", self.kappa_points, "sweep is limited to 10^4 cells"));
        }
        if !(self.trunc_tol > 0.0 && self.trunc_tol < 1.0) {
            return Err(bad("trunc_tol", self.trunc_tol, "must lie in (0, 1)"));
        }
        if self.workers > 1024 {
            return Err(bad("workers", self.workers, "must be at most 1024"));
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        KEYS.iter().map(|k| (k.to_string(), self.get(k).expect("known key"))).collect()
    }
}
