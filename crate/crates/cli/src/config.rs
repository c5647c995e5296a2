//! Run configuration: a TOML file, command-line flags on top, then defaults.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use dicke_otto::engine::{CycleBaths, FrictionReference, StrokeSchedule};
use dicke_otto::thermostatics::{DeltaProtocol, ModeConvention, SweepAxis};
use dicke_otto::{BasisConfig, ModelParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Lowest levels of one Hamiltonian (or a small grid of them).
    Spectrum,
    /// Quasistatic cycle over one or two parameter axes.
    Quasistatic,
    /// Operating-mode map over coupling and Stark strength.
    PhaseDiagram,
    /// Quasistatic work with different Stark strengths on the two legs.
    AsymmetricU,
    /// Quasistatic cycle against the number of atoms.
    AtomsScan,
    /// Finite-time cycles, every cycle reported.
    FiniteTime,
    /// Finite-time power against stroke durations, last cycle only.
    PowerScan,
    /// Finite-time cycle with different ramp durations, last cycle only.
    AsymmetricTime,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Quasistatic => "quasistatic",
            Command::PhaseDiagram => "phase-diagram",
            Command::AsymmetricU => "asymmetric-u",
            Command::AtomsScan => "atoms-scan",
            Command::FiniteTime => "finite-time",
            Command::PowerScan => "power-scan",
            Command::AsymmetricTime => "asymmetric-time",
        }
    }

    pub fn is_finite_time(&self) -> bool {
        matches!(
            self,
            Command::FiniteTime | Command::PowerScan | Command::AsymmetricTime
        )
    }

    fn default_atoms(&self) -> usize {
        if self.is_finite_time() || *self == Command::Spectrum {
            2
        } else {
            8
        }
    }

    fn default_lambda(&self) -> f64 {
        match self {
            Command::AsymmetricU => 0.48,
            Command::PowerScan => 0.58,
            _ => 0.47,
        }
    }

    /// Axes this command accepts.
    fn allowed_axes(&self) -> &'static [&'static str] {
        match self {
            Command::Spectrum => &["lambda", "u", "n_atoms", "omega"],
            Command::Quasistatic | Command::AtomsScan => {
                &["lambda", "u", "u2", "u4", "t_hot", "t_cold", "n_atoms"]
            }
            Command::PhaseDiagram => &["lambda", "u"],
            Command::AsymmetricU => &["u2", "u4"],
            Command::FiniteTime | Command::PowerScan => &[
                "lambda", "u", "t_hot", "t_cold", "tau_iso", "tau_ad", "tau1", "tau2", "tau3",
                "tau4",
            ],
            Command::AsymmetricTime => &["tau2", "tau4"],
        }
    }

    /// Axes that must all be present.
    fn required_axes(&self) -> &'static [&'static str] {
        match self {
            Command::PhaseDiagram => &["lambda", "u"],
            Command::AsymmetricU => &["u2", "u4"],
            Command::AtomsScan => &["n_atoms"],
            Command::AsymmetricTime => &["tau2", "tau4"],
            _ => &[],
        }
    }

    fn min_axes(&self) -> usize {
        match self {
            Command::Spectrum => 0,
            Command::AtomsScan
            | Command::PhaseDiagram
            | Command::AsymmetricU
            | Command::AsymmetricTime => 2,
            _ => 1,
        }
    }

    fn default_grid(&self) -> Vec<Axis> {
        let axis = |name: &str, values: Vec<f64>| Axis {
            axis: name.to_string(),
            values,
        };
        match self {
            Command::Spectrum => vec![],
            Command::Quasistatic => vec![axis("lambda", linspace(0.05, 0.9, 86))],
            Command::PhaseDiagram => vec![
                axis("lambda", linspace(0.05, 0.9, 35)),
                axis("u", linspace(-0.95, 0.95, 39)),
            ],
            Command::AsymmetricU => vec![
                axis("u2", linspace(-0.95, 0.95, 21)),
                axis("u4", linspace(-0.95, 0.95, 21)),
            ],
            Command::AtomsScan => vec![
                axis("n_atoms", vec![1.0, 2.0, 4.0, 8.0]),
                axis("lambda", linspace(0.05, 0.9, 35)),
            ],
            Command::FiniteTime => vec![
                axis("tau_iso", vec![1000.0, 4000.0]),
                axis("tau_ad", vec![0.5, 5.0, 20.0, 200.0]),
            ],
            Command::PowerScan => vec![
                axis("tau_iso", vec![1000.0, 2000.0, 4000.0]),
                axis("tau_ad", vec![1.0, 5.0, 10.0, 20.0]),
            ],
            Command::AsymmetricTime => vec![
                axis("tau2", vec![1.0, 5.0, 10.0, 20.0]),
                axis("tau4", vec![1.0, 5.0, 10.0, 20.0]),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `delta = "resonant"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSetting {
    Named(DeltaName),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaName {
    Resonant,
}

impl DeltaSetting {
    pub fn protocol(&self) -> DeltaProtocol {
        match *self {
            DeltaSetting::Named(DeltaName::Resonant) => DeltaProtocol::Resonant,
            DeltaSetting::Value(d) => DeltaProtocol::Fixed(d),
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        if s == "resonant" {
            return Ok(DeltaSetting::Named(DeltaName::Resonant));
        }
        s.parse::<f64>()
            .map(DeltaSetting::Value)
            .map_err(|_| CliError::Config(format!("delta: expected `resonant` or a number, got `{s}`")))
    }
}

// ---- file layout ------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub workers: Option<usize>,
    pub mode_convention: Option<ModeConvention>,
    pub friction_ref: Option<FrictionReference>,
    /// Levels reported by `spectrum`.
    pub levels: Option<usize>,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub bath: BathBlock,
    #[serde(default)]
    pub basis: BasisBlock,
    #[serde(default)]
    pub schedule: ScheduleBlock,
    pub grid: Option<Vec<AxisSpec>>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub lambda: Option<f64>,
    pub u: Option<f64>,
    pub u2: Option<f64>,
    pub u4: Option<f64>,
    pub delta: Option<DeltaSetting>,
    pub n_atoms: Option<usize>,
    pub omega: Option<f64>,
    pub omega_h: Option<f64>,
    pub omega_c: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathBlock {
    pub t_hot: Option<f64>,
    pub t_cold: Option<f64>,
    pub alpha: Option<f64>,
    pub omega_cut: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisBlock {
    pub n_tr: Option<usize>,
    pub fock_cutoff: Option<usize>,
    pub convergence_rel_tol: Option<f64>,
    pub n_levels_checked: Option<usize>,
    pub n_kept: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    /// Sets `tau1` and `tau3`.
    pub tau_iso: Option<f64>,
    /// Sets `tau2` and `tau4`.
    pub tau_ad: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub tau3: Option<f64>,
    pub tau4: Option<f64>,
    pub dt_isochoric: Option<f64>,
    pub dt_adiabatic: Option<f64>,
    pub n_cycles: Option<usize>,
}

/// Either `start`/`stop`/`count` or an explicit `values` list.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub axis: String,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    pub values: Option<Vec<f64>>,
}

impl AxisSpec {
    fn resolve(&self) -> Result<Axis, CliError> {
        let values = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(CliError::Config(format!("grid axis `{}`: count must be positive", self.axis)));
                }
                if n == 1 {
                    if a != b {
                        return Err(CliError::Config(format!(
                            "grid axis `{}`: count = 1 needs start = stop",
                            self.axis
                        )));
                    }
                    vec![a]
                } else {
                    linspace(a, b, n)
                }
            }
            _ => {
                return Err(CliError::Config(format!(
                    "grid axis `{}`: give either `values` or all of `start`, `stop`, `count`",
                    self.axis
                )))
            }
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config(format!(
                "grid axis `{}`: values must be finite and non-empty",
                self.axis
            )));
        }
        Ok(Axis {
            axis: self.axis.clone(),
            values,
        })
    }

    /// `name=start:stop:count` or `name=v1,v2,...`.
    pub fn parse_flag(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("--axis `{s}`: expected name=start:stop:count or name=v1,v2,..."));
        let (name, rest) = s.split_once('=').ok_or_else(bad)?;
        let mut spec = AxisSpec {
            axis: name.trim().to_string(),
            ..AxisSpec::default()
        };
        if rest.contains(':') {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            spec.start = Some(parts[0].trim().parse().map_err(|_| bad())?);
            spec.stop = Some(parts[1].trim().parse().map_err(|_| bad())?);
            spec.count = Some(parts[2].trim().parse().map_err(|_| bad())?);
        } else {
            let values: Result<Vec<f64>, _> = rest.split(',').map(|v| v.trim().parse()).collect();
            spec.values = Some(values.map_err(|_| bad())?);
        }
        Ok(spec)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
    pub precision: Option<usize>,
}

// ---- flags ----------------------------------------------------------------

/// Quantum Otto engine simulator with a Dicke-Stark working substance.
///
/// Settings come from an optional TOML file; flags override it.
#[derive(Debug, Parser)]
#[command(name = "dicke-otto", version)]
pub struct Cli {
    /// Study to run; overrides `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML configuration file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,

    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Stark strength on both legs.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,
    /// Stark strength on the hot leg.
    #[arg(long, allow_hyphen_values = true)]
    pub u2: Option<f64>,
    /// Stark strength on the cold leg.
    #[arg(long, allow_hyphen_values = true)]
    pub u4: Option<f64>,
    /// Qubit splitting: `resonant` (equal to the mode frequency) or a number.
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub n_atoms: Option<usize>,
    /// Mode frequency for the `spectrum` command.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub omega_h: Option<f64>,
    #[arg(long)]
    pub omega_c: Option<f64>,

    #[arg(long)]
    pub t_hot: Option<f64>,
    #[arg(long)]
    pub t_cold: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub omega_cut: Option<f64>,

    #[arg(long)]
    pub n_tr: Option<usize>,
    #[arg(long)]
    pub fock_cutoff: Option<usize>,
    #[arg(long)]
    pub n_kept: Option<usize>,
    /// Levels reported by `spectrum`.
    #[arg(long)]
    pub levels: Option<usize>,

    #[arg(long)]
    pub tau_iso: Option<f64>,
    #[arg(long)]
    pub tau_ad: Option<f64>,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long)]
    pub tau3: Option<f64>,
    #[arg(long)]
    pub tau4: Option<f64>,
    #[arg(long)]
    pub dt_isochoric: Option<f64>,
    #[arg(long)]
    pub dt_adiabatic: Option<f64>,
    #[arg(long)]
    pub n_cycles: Option<usize>,

    /// Grid axis, `name=start:stop:count` or `name=v1,v2,...`; repeat for a
    /// second axis. Replaces the grid from the file.
    #[arg(long = "axis", allow_hyphen_values = true)]
    pub axes: Vec<String>,

    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Significant digits for floats.
    #[arg(long)]
    pub precision: Option<usize>,
    /// `standard` or `literal`.
    #[arg(long)]
    pub mode_convention: Option<String>,
    /// `gibbs` or `adiabatic`.
    #[arg(long)]
    pub friction_ref: Option<String>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub workers: Option<usize>,

    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

// ---- resolved configuration ---------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSettings {
    pub lambda: f64,
    pub u: f64,
    pub u2: f64,
    pub u4: f64,
    pub delta: DeltaSetting,
    pub n_atoms: usize,
    pub omega: f64,
    pub omega_h: f64,
    pub omega_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisSettings {
    pub n_tr: usize,
    pub fock_cutoff: usize,
    pub convergence_rel_tol: f64,
    pub n_levels_checked: usize,
    pub n_kept: usize,
}

impl BasisSettings {
    pub fn config(&self) -> BasisConfig {
        BasisConfig {
            n_tr: self.n_tr,
            fock_cutoff: self.fock_cutoff,
            convergence_rel_tol: self.convergence_rel_tol,
            n_levels_checked: self.n_levels_checked,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSettings {
    pub path: PathBuf,
    pub format: Format,
    pub precision: usize,
}

/// Fully materialized configuration. Serializes to a TOML file that loads
/// back to the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub workers: usize,
    pub mode_convention: ModeConvention,
    pub friction_ref: FrictionReference,
    pub levels: usize,
    pub model: ModelSettings,
    pub bath: CycleBaths,
    pub basis: BasisSettings,
    pub schedule: StrokeSchedule,
    pub output: OutputSettings,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<Axis>,
}

impl RunConfig {
    /// Everything that determines the numbers: the configuration without
    /// `workers` and `output`, as compact JSON.
    pub fn physics_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("workers");
            map.remove("output");
        }
        serde_json::to_string(&v).expect("config serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect()
}

pub fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_file(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_file(text: &str) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
}

fn parse_choice<T: for<'de> Deserialize<'de>>(field: &str, value: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| CliError::Config(format!("{field}: unknown value `{value}`")))
}

/// Flags over file over defaults, then validation.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut file = match &cli.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    apply_flags(&mut file, cli)?;
    materialize(file)
}

fn apply_flags(file: &mut FileConfig, cli: &Cli) -> Result<(), CliError> {
    fn set<T: Copy>(slot: &mut Option<T>, flag: Option<T>) {
        if flag.is_some() {
            *slot = flag;
        }
    }
    set(&mut file.command, cli.command);
    set(&mut file.workers, cli.workers);
    set(&mut file.levels, cli.levels);
    if let Some(s) = &cli.mode_convention {
        file.mode_convention = Some(parse_choice("mode_convention", s)?);
    }
    if let Some(s) = &cli.friction_ref {
        file.friction_ref = Some(parse_choice("friction_ref", s)?);
    }

    let m = &mut file.model;
    set(&mut m.lambda, cli.lambda);
    set(&mut m.u, cli.u);
    set(&mut m.u2, cli.u2);
    set(&mut m.u4, cli.u4);
    if let Some(s) = &cli.delta {
        m.delta = Some(DeltaSetting::parse(s)?);
    }
    set(&mut m.n_atoms, cli.n_atoms);
    set(&mut m.omega, cli.omega);
    set(&mut m.omega_h, cli.omega_h);
    set(&mut m.omega_c, cli.omega_c);

    let b = &mut file.bath;
    set(&mut b.t_hot, cli.t_hot);
    set(&mut b.t_cold, cli.t_cold);
    set(&mut b.alpha, cli.alpha);
    set(&mut b.omega_cut, cli.omega_cut);

    let k = &mut file.basis;
    set(&mut k.n_tr, cli.n_tr);
    set(&mut k.fock_cutoff, cli.fock_cutoff);
    set(&mut k.n_kept, cli.n_kept);

    let s = &mut file.schedule;
    set(&mut s.tau_iso, cli.tau_iso);
    set(&mut s.tau_ad, cli.tau_ad);
    set(&mut s.tau1, cli.tau1);
    set(&mut s.tau2, cli.tau2);
    set(&mut s.tau3, cli.tau3);
    set(&mut s.tau4, cli.tau4);
    set(&mut s.dt_isochoric, cli.dt_isochoric);
    set(&mut s.dt_adiabatic, cli.dt_adiabatic);
    set(&mut s.n_cycles, cli.n_cycles);

    if !cli.axes.is_empty() {
        file.grid = Some(
            cli.axes
                .iter()
                .map(|a| AxisSpec::parse_flag(a))
                .collect::<Result<_, _>>()?,
        );
    }

    let o = &mut file.output;
    if cli.output.is_some() {
        o.path = cli.output.clone();
    }
    set(&mut o.format, cli.format);
    set(&mut o.precision, cli.precision);
    Ok(())
}

pub fn materialize(file: FileConfig) -> Result<RunConfig, CliError> {
    let command = file
        .command
        .ok_or_else(|| CliError::Config("no command given (flag or `command` key)".to_string()))?;

    let u = file.model.u.unwrap_or(0.0);
    let model = ModelSettings {
        lambda: file.model.lambda.unwrap_or(command.default_lambda()),
        u,
        u2: file.model.u2.unwrap_or(u),
        u4: file.model.u4.unwrap_or(u),
        delta: file
            .model
            .delta
            .unwrap_or(DeltaSetting::Named(DeltaName::Resonant)),
        n_atoms: file.model.n_atoms.unwrap_or(command.default_atoms()),
        omega: file.model.omega.unwrap_or(1.0),
        omega_h: file.model.omega_h.unwrap_or(2.0),
        omega_c: file.model.omega_c.unwrap_or(1.0),
    };

    let bath_default = CycleBaths::default();
    let bath = CycleBaths {
        t_hot: file.bath.t_hot.unwrap_or(bath_default.t_hot),
        t_cold: file.bath.t_cold.unwrap_or(bath_default.t_cold),
        alpha: file.bath.alpha.unwrap_or(bath_default.alpha),
        omega_cut: file.bath.omega_cut.unwrap_or(bath_default.omega_cut),
    };

    let basis_default = BasisConfig::default();
    let basis = BasisSettings {
        n_tr: file.basis.n_tr.unwrap_or(basis_default.n_tr),
        fock_cutoff: file.basis.fock_cutoff.unwrap_or(basis_default.fock_cutoff),
        convergence_rel_tol: file
            .basis
            .convergence_rel_tol
            .unwrap_or(basis_default.convergence_rel_tol),
        n_levels_checked: file
            .basis
            .n_levels_checked
            .unwrap_or(basis_default.n_levels_checked),
        n_kept: file.basis.n_kept.unwrap_or(dicke_otto::spectrum::DEFAULT_N_KEPT),
    };

    let sb = &file.schedule;
    let mut schedule = StrokeSchedule::default();
    if let Some(t) = sb.tau_iso {
        schedule.tau1 = t;
        schedule.tau3 = t;
    }
    if let Some(t) = sb.tau_ad {
        schedule.tau2 = t;
        schedule.tau4 = t;
    }
    schedule.tau1 = sb.tau1.unwrap_or(schedule.tau1);
    schedule.tau2 = sb.tau2.unwrap_or(schedule.tau2);
    schedule.tau3 = sb.tau3.unwrap_or(schedule.tau3);
    schedule.tau4 = sb.tau4.unwrap_or(schedule.tau4);
    schedule.dt_isochoric = sb.dt_isochoric.unwrap_or(schedule.dt_isochoric);
    schedule.dt_adiabatic = sb.dt_adiabatic.unwrap_or(schedule.dt_adiabatic);
    schedule.n_cycles = sb.n_cycles.unwrap_or(schedule.n_cycles);

    let grid = match &file.grid {
        Some(specs) => specs.iter().map(AxisSpec::resolve).collect::<Result<_, _>>()?,
        None => command.default_grid(),
    };

    let format = file.output.format.unwrap_or(Format::Csv);
    let output = OutputSettings {
        path: file
            .output
            .path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.{}", command.name(), format.extension()))),
        format,
        precision: file.output.precision.unwrap_or(12),
    };

    let config = RunConfig {
        command,
        workers: file.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        }),
        mode_convention: file.mode_convention.unwrap_or_default(),
        friction_ref: file.friction_ref.unwrap_or_default(),
        levels: file.levels.unwrap_or(20),
        model,
        bath,
        basis,
        schedule,
        output,
        grid,
    };
    validate(&config)?;
    Ok(config)
}

fn model_error(e: dicke_otto::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    let cfg = |msg: String| Err(CliError::Config(msg));
    if c.workers == 0 {
        return cfg("workers: must be at least 1".to_string());
    }
    if !(1..=17).contains(&c.output.precision) {
        return cfg(format!(
            "output.precision: must lie in 1..=17, got {}",
            c.output.precision
        ));
    }
    if c.levels == 0 {
        return cfg("levels: must be at least 1".to_string());
    }

    let m = &c.model;
    let delta = m.delta.protocol();
    delta.validate().map_err(model_error)?;
    let basis = c.basis.config();
    basis.validate().map_err(model_error)?;
    if c.command == Command::Spectrum {
        ModelParams::new(m.omega, delta.at(m.omega), m.lambda, m.u, m.n_atoms).map_err(model_error)?;
    } else {
        if !(m.omega_c > 0.0 && m.omega_h > m.omega_c) {
            return cfg(format!(
                "model: requires omega_h > omega_c > 0, got {} and {}",
                m.omega_h, m.omega_c
            ));
        }
        for (omega, u) in [(m.omega_h, m.u2), (m.omega_c, m.u4), (m.omega_c, m.u)] {
            ModelParams::new(omega, delta.at(omega), m.lambda, u, m.n_atoms).map_err(model_error)?;
        }
        c.bath.hot().map_err(model_error)?;
        c.bath.cold().map_err(model_error)?;
    }
    if c.command.is_finite_time() {
        if m.u2 != m.u4 {
            return cfg("model: finite-time commands need u2 = u4".to_string());
        }
        c.schedule.validate().map_err(model_error)?;
        let dim = (m.n_atoms + 1) * (c.basis.n_tr + 1);
        if c.basis.n_kept == 0 || c.basis.n_kept > dim {
            return cfg(format!("basis.n_kept: must lie in 1..={dim}, got {}", c.basis.n_kept));
        }
    }

    let allowed = c.command.allowed_axes();
    if c.grid.len() > 2 || c.grid.len() < c.command.min_axes() {
        return cfg(format!(
            "grid: `{}` takes {} to 2 axes, got {}",
            c.command.name(),
            c.command.min_axes(),
            c.grid.len()
        ));
    }
    for (i, a) in c.grid.iter().enumerate() {
        if !allowed.contains(&a.axis.as_str()) {
            return cfg(format!(
                "grid: axis `{}` is not valid for `{}` (allowed: {})",
                a.axis,
                c.command.name(),
                allowed.join(", ")
            ));
        }
        if c.grid[..i].iter().any(|b| b.axis == a.axis) {
            return cfg(format!("grid: axis `{}` repeated", a.axis));
        }
        if a.axis == "n_atoms" && a.values.iter().any(|v| !(*v >= 1.0 && v.fract() == 0.0)) {
            return cfg("grid: `n_atoms` values must be positive integers".to_string());
        }
        if a.axis.starts_with("tau") && a.values.iter().any(|v| *v < 0.0) {
            return cfg(format!("grid: `{}` values must be non-negative", a.axis));
        }
    }
    for required in c.command.required_axes() {
        if !c.grid.iter().any(|a| a.axis == *required) {
            return cfg(format!(
                "grid: `{}` needs a `{required}` axis",
                c.command.name()
            ));
        }
    }
    if !c.command.is_finite_time() && c.command != Command::Spectrum {
        for a in &c.grid {
            if SweepAxis::parse(&a.axis).is_none() {
                return cfg(format!("grid: unknown axis `{}`", a.axis));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("dicke-otto").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn quasistatic_defaults() {
        let c = resolve(&cli(&["quasistatic"])).unwrap();
        assert_eq!(c.model.n_atoms, 8);
        assert_eq!((c.model.omega_h, c.model.omega_c), (2.0, 1.0));
        assert_eq!((c.bath.t_hot, c.bath.t_cold), (0.5, 0.1));
        assert_eq!(c.output.precision, 12);
        assert_eq!(c.grid[0].axis, "lambda");
        let f = resolve(&cli(&["finite-time"])).unwrap();
        assert_eq!(f.model.n_atoms, 2);
    }

    #[test]
    fn axis_flags() {
        let a = AxisSpec::parse_flag("u=-0.9:0.9:3").unwrap().resolve().unwrap();
        assert_eq!(a.values, vec![-0.9, 0.0, 0.9]);
        let b = AxisSpec::parse_flag("tau_ad=0.5,5,20").unwrap().resolve().unwrap();
        assert_eq!(b.values, vec![0.5, 5.0, 20.0]);
        assert!(AxisSpec::parse_flag("lambda").is_err());
        assert!(AxisSpec::parse_flag("lambda=0:1").is_err());
    }

    #[test]
    fn rejects_bad_axes() {
        let err = resolve(&cli(&["phase-diagram", "--axis", "lambda=0.1:0.5:3"])).unwrap_err();
        assert!(err.to_string().contains("needs a `u` axis") || err.to_string().contains("2 axes"));
        let err = resolve(&cli(&["asymmetric-u", "--axis", "u2=0,0.1", "--axis", "tau2=1,2"])).unwrap_err();
        assert!(err.to_string().contains("not valid"), "{err}");
    }

    #[test]
    fn delta_setting() {
        let f = parse_file("command = \"quasistatic\"\n[model]\ndelta = 1.0\n").unwrap();
        assert_eq!(f.model.delta, Some(DeltaSetting::Value(1.0)));
        let f = parse_file("[model]\ndelta = \"resonant\"\n").unwrap();
        assert_eq!(f.model.delta, Some(DeltaSetting::Named(DeltaName::Resonant)));
        assert!(parse_file("[model]\ndelta = \"fixed\"\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = resolve(&cli(&["power-scan", "--workers", "3", "--u", "-0.5"])).unwrap();
        let back = materialize(parse_file(&c.to_toml()).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
