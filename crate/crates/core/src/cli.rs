//! Command-line front end: flat JSON configuration, four subcommands, and
//! CSV/JSON emission with 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::dynamics::{evolve_with, lyapunov_steady_state, thermal_initial_state};
use crate::error::Error;
use crate::matrices::{diffusion, DriftMode, DriftModel};
use crate::measures::{bogoliubov_occupations, entanglement_report, log_negativity, purity};
use crate::model::{direct_couplings, effective_couplings, DriveSpec, EffectiveCouplings, SystemParams};
use crate::stability::{floquet, floquet_constant, hurwitz_stable, FloquetResult};
use crate::sweep::{linspace, refine_optimum, run_sweep, MeasureSet, SweepAxis, SweepResult, SweepSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_UNSTABLE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

const KNOWN_KEYS: &[&str] = &[
    "omega1", "omega2", "delta", "kappa", "gamma1", "gamma2", "nbar_d", "nbar_1", "nbar_2",
    "g_minus", "g_plus", "ratio", "epsilon_plus", "epsilon_minus", "g1", "g2a", "g2b", "mode",
    "t_end", "dt_out", "axis", "grid", "grid_min", "grid_max", "grid_points", "refine",
    "occupations", "period", "out",
];

const DRIVE_KEYS: [&str; 5] = ["epsilon_plus", "epsilon_minus", "g1", "g2a", "g2b"];

#[derive(Debug, Parser)]
#[command(name = "optoent", version, about = "Entanglement dynamics of a reservoir-engineered optomechanical system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; standard output when omitted (required for `sweep`).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Override the drift mode.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Override a configuration key. The value is read as JSON, else as a string.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Steady-state covariance and entanglement of the RWA model.
    Steady,
    /// Covariance trajectory from the thermal state, as CSV.
    Evolve,
    /// Floquet multipliers over one period.
    Floquet,
    /// Steady-state sweep over the coupling ratio or the detuning.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Rwa,
}

impl ModeArg {
    fn as_str(self) -> &'static str {
        match self {
            ModeArg::Full => "full",
            ModeArg::Rwa => "rwa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("config must be a JSON object")]
    NotObject,
    #[error("invalid override `{0}`: expected KEY=VALUE")]
    BadOverride(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// Offending key, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey(k) | ConfigError::Invalid { key: k, .. } => Some(k),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model is unstable: {0}")]
    Unstable(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Unstable(_) => EXIT_UNSTABLE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Unstable(msg) => CliError::Unstable(msg),
            e if e.is_numerical() => CliError::Numerical(e),
            Error::InvalidParameter { name, reason } => ConfigError::invalid(name, reason).into(),
            other => ConfigError::Invalid {
                key: "config".into(),
                reason: other.to_string(),
            }
            .into(),
        }
    }
}

/// Where the effective couplings come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSource {
    /// `G-` with an optional `G+` (ratio sweeps do not need one).
    Direct { g_minus: f64, g_plus: Option<f64> },
    Drive(DriveSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub couplings: CouplingSource,
    pub mode: DriftMode,
    pub t_end: Option<f64>,
    pub dt_out: Option<f64>,
    pub axis: Option<SweepAxis>,
    pub grid: Option<Vec<f64>>,
    pub refine: bool,
    pub occupations: bool,
    /// Period used by `floquet` for the constant RWA drift.
    pub period: f64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn effective(&self) -> Result<EffectiveCouplings, ConfigError> {
        match &self.couplings {
            CouplingSource::Direct { g_minus, g_plus } => {
                let g_plus = g_plus.ok_or_else(|| ConfigError::invalid("g_plus", "g_plus or ratio required"))?;
                checked_direct(g_plus, *g_minus)
            }
            CouplingSource::Drive(drive) => effective_couplings(&self.params, drive).map_err(drive_error),
        }
    }

    pub fn model(&self) -> Result<DriftModel, ConfigError> {
        Ok(DriftModel::new(self.params, self.effective()?, self.mode))
    }
}

fn checked_direct(g_plus: f64, g_minus: f64) -> Result<EffectiveCouplings, ConfigError> {
    direct_couplings(g_plus, g_minus).map_err(|e| match e {
        Error::Unstable(_) => ConfigError::invalid("g_plus", format!("G+ < G- violated (G+ = {g_plus}, G- = {g_minus})")),
        Error::InvalidParameter { name, reason } => ConfigError::invalid(name, reason),
        other => ConfigError::invalid("g_plus", other.to_string()),
    })
}

fn drive_error(e: Error) -> ConfigError {
    match e {
        Error::InvalidParameter { name, reason } => ConfigError::invalid(name, reason),
        Error::CouplingMismatch { which, .. } => {
            ConfigError::invalid(if which == "G_plus" { "g2a" } else { "g2b" }, e.to_string())
        }
        Error::SingularDenominator { .. } => ConfigError::invalid("delta", e.to_string()),
        Error::Unstable(_) => ConfigError::invalid("epsilon_plus", format!("drive gives {e}")),
        other => ConfigError::invalid("epsilon_minus", other.to_string()),
    }
}

/// Parses JSON text into an object, reporting syntax errors by position.
pub fn parse_object(text: &str) -> Result<Map<String, Value>, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(ConfigError::NotObject),
    }
}

/// Applies `KEY=VALUE` overrides; values that are not valid JSON become strings.
pub fn apply_overrides(map: &mut Map<String, Value>, overrides: &[String]) -> Result<(), ConfigError> {
    for o in overrides {
        let (key, raw) = o.split_once('=').ok_or_else(|| ConfigError::BadOverride(o.clone()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::BadOverride(o.clone()));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.to_string(), value);
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    config_from_map(parse_object(text)?)
}

fn take<T: DeserializeOwned>(map: &mut Map<String, Value>, key: &str) -> Result<Option<T>, ConfigError> {
    match map.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| ConfigError::invalid(key, e.to_string())),
    }
}

fn finite(key: &str, v: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match v {
        Some(x) if !x.is_finite() => Err(ConfigError::invalid(key, "must be finite")),
        other => Ok(other),
    }
}

fn positive(key: &str, v: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match finite(key, v)? {
        Some(x) if x <= 0.0 => Err(ConfigError::invalid(key, format!("must be > 0, got {x}"))),
        other => Ok(other),
    }
}

/// Validates a configuration object; every key is checked before use.
pub fn config_from_map(mut map: Map<String, Value>) -> Result<RunConfig, ConfigError> {
    if let Some(k) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(k.clone()));
    }
    let has_drive = DRIVE_KEYS.iter().any(|k| map.contains_key(*k));

    let mut params = SystemParams::default();
    for (key, slot) in [
        ("omega1", &mut params.omega1),
        ("omega2", &mut params.omega2),
        ("delta", &mut params.delta),
        ("kappa", &mut params.kappa),
        ("gamma1", &mut params.gamma1),
        ("gamma2", &mut params.gamma2),
        ("nbar_d", &mut params.nbar_d),
        ("nbar_1", &mut params.nbar_1),
        ("nbar_2", &mut params.nbar_2),
    ] {
        if let Some(v) = take::<f64>(&mut map, key)? {
            *slot = v;
        }
    }
    params.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => ConfigError::invalid(name, reason),
        other => ConfigError::invalid("config", other.to_string()),
    })?;

    let g_minus = finite("g_minus", take(&mut map, "g_minus")?)?;
    let g_plus = finite("g_plus", take(&mut map, "g_plus")?)?;
    let ratio = finite("ratio", take(&mut map, "ratio")?)?;
    let couplings = if has_drive {
        for k in ["g_minus", "g_plus", "ratio"] {
            let given = match k {
                "g_minus" => g_minus,
                "g_plus" => g_plus,
                _ => ratio,
            };
            if given.is_some() {
                return Err(ConfigError::invalid(k, "cannot be combined with drive keys"));
            }
        }
        let eps = |map: &mut Map<String, Value>, key: &str| -> Result<Complex64, ConfigError> {
            let [re, im] = take::<[f64; 2]>(map, key)?.ok_or_else(|| ConfigError::invalid(key, "required with drive keys"))?;
            if !(re.is_finite() && im.is_finite()) {
                return Err(ConfigError::invalid(key, "must be finite"));
            }
            Ok(Complex64::new(re, im))
        };
        let real = |map: &mut Map<String, Value>, key: &str| -> Result<f64, ConfigError> {
            finite(key, take(map, key)?)?.ok_or_else(|| ConfigError::invalid(key, "required with drive keys"))
        };
        let drive = DriveSpec {
            epsilon_plus: eps(&mut map, "epsilon_plus")?,
            epsilon_minus: eps(&mut map, "epsilon_minus")?,
            g1: real(&mut map, "g1")?,
            g2_a: real(&mut map, "g2a")?,
            g2_b: real(&mut map, "g2b")?,
        };
        effective_couplings(&params, &drive).map_err(drive_error)?;
        CouplingSource::Drive(drive)
    } else {
        let g_minus = g_minus.ok_or_else(|| ConfigError::invalid("g_minus", "required"))?;
        if !(g_minus > 0.0) {
            return Err(ConfigError::invalid("g_minus", format!("must be > 0, got {g_minus}")));
        }
        let g_plus = match (g_plus, ratio) {
            (Some(_), Some(_)) => return Err(ConfigError::invalid("ratio", "give either g_plus or ratio, not both")),
            (Some(gp), None) => Some(gp),
            (None, Some(r)) => {
                if !(0.0..1.0).contains(&r) {
                    return Err(ConfigError::invalid("ratio", format!("must lie in [0, 1), got {r}")));
                }
                Some(r * g_minus)
            }
            (None, None) => None,
        };
        if let Some(gp) = g_plus {
            checked_direct(gp, g_minus)?;
        }
        CouplingSource::Direct { g_minus, g_plus }
    };

    let mode = take::<DriftMode>(&mut map, "mode")?.unwrap_or(DriftMode::Rwa);
    let t_end = positive("t_end", take(&mut map, "t_end")?)?;
    let dt_out = positive("dt_out", take(&mut map, "dt_out")?)?;
    let axis = take::<SweepAxis>(&mut map, "axis")?;

    let grid = take::<Vec<f64>>(&mut map, "grid")?;
    let grid_min = finite("grid_min", take(&mut map, "grid_min")?)?;
    let grid_max = finite("grid_max", take(&mut map, "grid_max")?)?;
    let grid_points = take::<usize>(&mut map, "grid_points")?;
    let ranged = grid_min.is_some() || grid_max.is_some() || grid_points.is_some();
    let grid = match (grid, ranged) {
        (Some(_), true) => return Err(ConfigError::invalid("grid", "cannot be combined with grid_min/grid_max/grid_points")),
        (Some(g), false) => Some(g),
        (None, true) => {
            let lo = grid_min.ok_or_else(|| ConfigError::invalid("grid_min", "required with grid_max/grid_points"))?;
            let hi = grid_max.ok_or_else(|| ConfigError::invalid("grid_max", "required with grid_min/grid_points"))?;
            let n = grid_points.ok_or_else(|| ConfigError::invalid("grid_points", "required with grid_min/grid_max"))?;
            if n < 2 {
                return Err(ConfigError::invalid("grid_points", "must be >= 2"));
            }
            if !(hi > lo) {
                return Err(ConfigError::invalid("grid_max", "must exceed grid_min"));
            }
            Some(linspace(lo, hi, n))
        }
        (None, false) => None,
    };

    let refine = take::<bool>(&mut map, "refine")?.unwrap_or(false);
    let occupations = take::<bool>(&mut map, "occupations")?.unwrap_or(false);
    let period = positive("period", take(&mut map, "period")?)?.unwrap_or(1.0);
    let out = take::<PathBuf>(&mut map, "out")?;

    Ok(RunConfig {
        params,
        couplings,
        mode,
        t_end,
        dt_out,
        axis,
        grid,
        refine,
        occupations,
        period,
        out,
    })
}

/// Reads the config file (or an empty object), applies the command-line
/// overrides and validates.
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut map = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
            parse_object(&text)?
        }
        None => Map::new(),
    };
    apply_overrides(&mut map, &cli.set)?;
    if let Some(mode) = cli.mode {
        map.insert("mode".into(), Value::String(mode.as_str().into()));
    }
    if let Some(out) = &cli.out {
        map.insert("out".into(), Value::String(out.to_string_lossy().into_owned()));
    }
    Ok(config_from_map(map)?)
}

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e12)`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    const P: i32 = 12;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        fmt_num(x)
    } else {
        "null".into()
    }
}

fn json_array(xs: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = xs.into_iter().map(json_num).collect();
    format!("[{}]", items.join(","))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e)),
        None => io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::io("writing standard output", e)),
    }
}

fn require_rwa(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    if cfg.mode != DriftMode::Rwa {
        return Err(ConfigError::invalid("mode", format!("`{command}` requires mode \"rwa\"")).into());
    }
    Ok(())
}

pub fn steady_record(cfg: &RunConfig) -> Result<String, CliError> {
    require_rwa(cfg, "steady")?;
    let model = cfg.model()?;
    if !hurwitz_stable(&model)? {
        return Err(CliError::Unstable("drift matrix is not Hurwitz".into()));
    }
    let state = lyapunov_steady_state(&model, &diffusion(&model.params))?;
    let report = entanglement_report(&state.reduced())?;
    let occ = bogoliubov_occupations(&state, model.couplings.squeezing);
    let sigma = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|(i, j)| state.sigma[(i, j)]);
    Ok(format!(
        "{{\"E_N\":{},\"mu\":{},\"eta\":{},\"sigma\":{},\"symplectic_eigenvalues\":{},\"bogoliubov_occupations\":{}}}\n",
        json_num(report.log_negativity),
        json_num(report.purity),
        json_num(report.eta),
        json_array(sigma),
        json_array([report.symplectic_eigenvalues.0, report.symplectic_eigenvalues.1]),
        json_array(occ),
    ))
}

pub fn floquet_analysis(cfg: &RunConfig) -> Result<FloquetResult, CliError> {
    let model = cfg.model()?;
    let result = match model.mode {
        DriftMode::Full => floquet(&model).map_err(|e| match e {
            Error::Incommensurate => CliError::from(ConfigError::invalid("omega2", e.to_string())),
            other => other.into(),
        })?,
        DriftMode::Rwa => floquet_constant(&model.drift(0.0), cfg.period)?,
    };
    Ok(result)
}

pub fn floquet_record(result: &FloquetResult) -> String {
    let multipliers: Vec<String> = result
        .multipliers
        .iter()
        .map(|z| json_array([z.re, z.im]))
        .collect();
    format!(
        "{{\"period\":{},\"multipliers\":[{}],\"max_modulus\":{},\"stable\":{}}}\n",
        json_num(result.period),
        multipliers.join(","),
        json_num(result.max_modulus),
        result.stable
    )
}

/// Stability gate for `evolve`; incommensurate full models cannot be
/// checked and are integrated anyway.
fn check_evolve_stability(model: &DriftModel) -> Result<(), CliError> {
    match model.mode {
        DriftMode::Rwa => {
            if !hurwitz_stable(model)? {
                return Err(CliError::Unstable("drift matrix is not Hurwitz".into()));
            }
        }
        DriftMode::Full => match floquet(model) {
            Ok(r) if !r.stable => {
                return Err(CliError::Unstable(format!(
                    "largest Floquet multiplier modulus {}",
                    fmt_num(r.max_modulus)
                )))
            }
            Ok(_) => {}
            Err(Error::Incommensurate) => {
                eprintln!("warning: incommensurate frequencies; Floquet stability not checked");
            }
            Err(e) => return Err(e.into()),
        },
    }
    Ok(())
}

/// Validated model and output times for `evolve`, after the stability gate.
pub fn prepare_evolve(cfg: &RunConfig) -> Result<(DriftModel, f64, f64), CliError> {
    let t_end = cfg.t_end.ok_or_else(|| ConfigError::invalid("t_end", "required by `evolve`"))?;
    let dt_out = cfg.dt_out.ok_or_else(|| ConfigError::invalid("dt_out", "required by `evolve`"))?;
    let model = cfg.model()?;
    check_evolve_stability(&model)?;
    Ok((model, t_end, dt_out))
}

/// Streams the trajectory CSV into `sink`.
pub fn write_trajectory<W: Write>(model: &DriftModel, t_end: f64, dt_out: f64, sink: W) -> Result<(), CliError> {
    let mut sink = BufWriter::new(sink);
    let mut failure: Option<CliError> = None;
    let mut line = String::new();
    let io_err = |e| CliError::io("writing trajectory", e);
    sink.write_all(b"t,E_N,mu,nu_min\n").map_err(io_err)?;
    evolve_with(model, &diffusion(&model.params), &thermal_initial_state(&model.params), t_end, dt_out, |s| {
        if failure.is_some() {
            return;
        }
        let rc = s.reduced();
        let row = log_negativity(&rc)
            .and_then(|n| Ok((n.log_negativity, purity(&rc)?, s.min_symplectic_eigenvalue()?)));
        match row {
            Ok((e, mu, nu)) => {
                line.clear();
                let _ = writeln!(line, "{},{},{},{}", fmt_num(s.t), fmt_num(e), fmt_num(mu), fmt_num(nu));
                if let Err(e) = sink.write_all(line.as_bytes()) {
                    failure = Some(io_err(e));
                }
            }
            Err(e) => failure = Some(e.into()),
        }
    })?;
    if let Some(f) = failure {
        return Err(f);
    }
    sink.flush().map_err(io_err)
}

fn run_evolve(cfg: &RunConfig) -> Result<(), CliError> {
    let (model, t_end, dt_out) = prepare_evolve(cfg)?;
    match &cfg.out {
        None => write_trajectory(&model, t_end, dt_out, io::stdout().lock()),
        Some(path) => {
            // written beside the target and renamed, so failures leave no partial file
            let mut tmp = path.clone().into_os_string();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            let file = fs::File::create(&tmp).map_err(|e| CliError::io(format!("creating {}", tmp.display()), e))?;
            match write_trajectory(&model, t_end, dt_out, file) {
                Ok(()) => fs::rename(&tmp, path).map_err(|e| CliError::io(format!("renaming to {}", path.display()), e)),
                Err(e) => {
                    let _ = fs::remove_file(&tmp);
                    Err(e)
                }
            }
        }
    }
}

pub fn sweep_spec(cfg: &RunConfig) -> Result<SweepSpec, CliError> {
    require_rwa(cfg, "sweep")?;
    let axis = cfg.axis.ok_or_else(|| ConfigError::invalid("axis", "required by `sweep` (\"coupling_ratio\" or \"detuning\")"))?;
    let (g_minus, g_plus) = match cfg.couplings {
        CouplingSource::Direct { g_minus, g_plus } => (g_minus, g_plus),
        CouplingSource::Drive(_) => {
            let c = cfg.effective()?;
            (c.g_minus, Some(c.g_plus))
        }
    };
    let g_plus = match axis {
        SweepAxis::CouplingRatio => g_plus.unwrap_or(0.0),
        SweepAxis::Detuning => g_plus.ok_or_else(|| ConfigError::invalid("g_plus", "g_plus or ratio required for a detuning sweep"))?,
    };
    let spec = SweepSpec {
        params: cfg.params,
        g_minus,
        g_plus,
        axis,
        grid: cfg.grid.clone().unwrap_or_else(|| axis.default_grid()),
        measures: MeasureSet {
            purity: true,
            occupations: cfg.occupations,
        },
    };
    spec.validate().map_err(|e| match e {
        Error::EmptyGrid | Error::InvalidGrid(_) => CliError::from(ConfigError::invalid("grid", e.to_string())),
        other => other.into(),
    })?;
    Ok(spec)
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut csv = String::from("axis,value,E_N,mu,stable\n");
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    for row in &result.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            result.axis.name(),
            fmt_num(row.value),
            opt(row.log_negativity),
            opt(row.purity),
            row.stable
        );
    }
    csv
}

pub fn sweep_optimum_record(result: &SweepResult, refined: Option<(f64, f64)>) -> String {
    let pair = |p: Option<(f64, f64)>| match p {
        Some((v, e)) => (json_num(v), json_num(e)),
        None => ("null".to_string(), "null".to_string()),
    };
    let (value, e_n) = pair(result.optimum);
    let (rvalue, re_n) = pair(refined);
    format!(
        "{{\"axis\":\"{}\",\"value\":{},\"E_N\":{},\"refined_value\":{},\"refined_E_N\":{},\"all_unstable\":{}}}\n",
        result.axis.name(),
        value,
        e_n,
        rvalue,
        re_n,
        result.all_unstable
    )
}

fn run_sweep_command(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| ConfigError::invalid("out", "`sweep` writes two files and needs an output path"))?;
    let spec = sweep_spec(cfg)?;
    let result = run_sweep(&spec)?;
    let refined = if cfg.refine && !result.all_unstable {
        match refine_optimum(&spec, &result) {
            Ok(r) => Some(r),
            Err(Error::EndpointOptimum) => {
                eprintln!("warning: optimum at a grid endpoint; not refined");
                None
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    if result.all_unstable {
        eprintln!("warning: every grid point is unstable");
    }
    emit(Some(&out), &sweep_csv(&result))?;
    emit(Some(&out.with_extension("json")), &sweep_optimum_record(&result, refined))
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Steady => {
            let record = steady_record(cfg)?;
            emit(cfg.out.as_deref(), &record)
        }
        Command::Evolve => run_evolve(cfg),
        Command::Floquet => {
            let result = floquet_analysis(cfg)?;
            emit(cfg.out.as_deref(), &floquet_record(&result))
        }
        Command::Sweep => run_sweep_command(cfg),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let result = load_config(cli).and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for an argument list; usage errors exit with the config code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
