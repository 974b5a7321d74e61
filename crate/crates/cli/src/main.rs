use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use optomech_cli::config::parse_config_text;
use optomech_cli::{run_command, CliError, Command, RunConfig};

/// Photon scattering off an optomechanical cavity and heralded two-oscillator
/// phonon states.
///
/// Parameters come from an optional key=value file (`--config`) and are
/// overridden by flags. Frequencies and rates are in units of omega_M.
#[derive(Parser, Debug)]
#[command(name = "optomech", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sideband transmission amplitudes t_m over input detuning.
    Transmission(Opts),
    /// Transmitted spectrum S(dw), closed form or master equation (--route).
    Spectrum(Opts),
    /// NOON probability P(N) over a (g, kappa1) grid.
    NoonSweep(Opts),
    /// Heralded NOON-state fidelity from the two-arm simulation.
    Fidelity(Opts),
    /// Quick invariant suite.
    Selfcheck(Opts),
}

#[derive(Args, Debug)]
struct Opts {
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path; the JSON sidecar goes next to it. Without it the CSV
    /// is printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_m: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n_th: Option<String>,
    /// Bath temperature in kelvin; reports both frequency conventions.
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega_m_hz: Option<String>,
    /// auto, dom:<k> (= -Delta_om + k) or a number.
    #[arg(long, allow_hyphen_values = true)]
    delta0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    m0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    /// Phonon levels per oscillator (auto or a number).
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    grid_start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    grid_stop: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    grid_step: Option<String>,
    /// analytic or me.
    #[arg(long, allow_hyphen_values = true)]
    route: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    step: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    /// ground or thermal.
    #[arg(long, allow_hyphen_values = true)]
    initial: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g_points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa_points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    trunc_tol: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, allow_hyphen_values = true)]
    workers: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
}

impl Opts {
    fn flags(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("g", &self.g),
            ("kappa1", &self.kappa1),
            ("kappa0", &self.kappa0),
            ("gamma_m", &self.gamma_m),
            ("n_th", &self.n_th),
            ("temperature", &self.temperature),
            ("omega_m_hz", &self.omega_m_hz),
            ("delta0", &self.delta0),
            ("d", &self.d),
            ("m0", &self.m0),
            ("n", &self.n),
            ("m", &self.m),
            ("grid_start", &self.grid_start),
            ("grid_stop", &self.grid_stop),
            ("grid_step", &self.grid_step),
            ("route", &self.route),
            ("step", &self.step),
            ("dt", &self.dt),
            ("initial", &self.initial),
            ("g_min", &self.g_min),
            ("g_max", &self.g_max),
            ("g_points", &self.g_points),
            ("kappa_min", &self.kappa_min),
            ("kappa_max", &self.kappa_max),
            ("kappa_points", &self.kappa_points),
            ("trunc_tol", &self.trunc_tol),
            ("workers", &self.workers),
            ("seed", &self.seed),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => Vec::new(),
        };
        let pairs = file.iter().map(|(k, v)| (k.as_str(), v.as_str())).chain(self.flags());
        RunConfig::from_pairs(pairs)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cmd, opts) = match &cli.command {
        Cmd::Transmission(o) => (Command::Transmission, o),
        Cmd::Spectrum(o) => (Command::Spectrum, o),
        Cmd::NoonSweep(o) => (Command::NoonSweep, o),
        Cmd::Fidelity(o) => (Command::Fidelity, o),
        Cmd::Selfcheck(o) => (Command::Selfcheck, o),
    };
    let cfg = opts.resolve()?;
    let clock = Instant::now();
    let bundle = run_command(cmd, &cfg)?;
    let wall = clock.elapsed().as_secs_f64();
    match &opts.out {
        Some(path) => {
            let side = bundle.write(&cfg, path, wall)?;
            eprintln!("{}: {} rows -> {} (+ {})", cmd.name(), bundle.rows.len(), path.display(), side.display());
        }
        None => print!("{}", bundle.csv()),
    }
    if cmd == Command::Selfcheck {
        let names = bundle.meta["checks"].as_array().cloned().unwrap_or_default();
        for (row, name) in bundle.rows.iter().zip(names) {
            let verdict = if row[3] == 1.0 { "PASS" } else { "FAIL" };
            eprintln!("{verdict} {} ({:e} < {:e})", name.as_str().unwrap_or("?"), row[1], row[2]);
        }
    }
    if !bundle.failures.is_empty() {
        return Err(CliError::Numerical(bundle.failures.join("; ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
