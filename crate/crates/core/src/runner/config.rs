//! Experiment configuration: TOML with sections, parsed permissively.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64 as C64;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::openquantum::NoiseSpec;
use crate::protocols::{working_points, BosonState};
use crate::truncation::CutoffPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Quadrature,
    Loschmidt,
    Qfi,
    FiniteEta,
    Noise,
    Validate,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Quadrature,
        Experiment::Loschmidt,
        Experiment::Qfi,
        Experiment::FiniteEta,
        Experiment::Noise,
        Experiment::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Quadrature => "quadrature",
            Experiment::Loschmidt => "loschmidt",
            Experiment::Qfi => "qfi",
            Experiment::FiniteEta => "finite_eta",
            Experiment::Noise => "noise",
            Experiment::Validate => "validate",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|e| e.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown format '{s}' (csv or json)"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Output {
    #[default]
    Stdout,
    File(PathBuf),
}

impl FromStr for Output {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "" => Err(Error::Config("empty output path".into())),
            "-" => Ok(Output::Stdout),
            p => Ok(Output::File(PathBuf::from(p))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub omega: f64,
    /// Frequency ratio(s); a list only for `finite_eta`.
    pub eta: Vec<f64>,
    pub gamma: f64,
    pub kappa: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: ModelKind::QrmEffective, omega: 1.0, eta: Vec::new(), gamma: 0.0, kappa: 0.1 }
    }
}

/// Parameter grid (g, λ or ω depending on the experiment).
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Range { min: f64, max: f64, steps: usize },
    Values(Vec<f64>),
    /// Working-point branches `m`; the grid values are `g_o(m)`.
    Branches(Vec<usize>),
}

impl Grid {
    pub fn range(min: f64, max: f64, steps: usize) -> Result<Self> {
        let g = Grid::Range { min, max, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Grid::Range { min, max, steps } => {
                if !(min.is_finite() && max.is_finite()) || min >= max {
                    return Err(Error::Config(format!("grid needs min < max (got {min}, {max})")));
                }
                if *steps < 2 {
                    return Err(Error::Config(format!("grid needs steps >= 2 (got {steps})")));
                }
            }
            Grid::Values(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Config("grid values must be a non-empty list of finite numbers".into()));
                }
            }
            Grid::Branches(m) => {
                if m.is_empty() || m.contains(&0) {
                    return Err(Error::Config("branches must be a non-empty list of integers >= 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Range { min, max, steps } => {
                (0..*steps).map(|i| min + (max - min) * i as f64 / (*steps - 1) as f64).collect()
            }
            Grid::Values(v) => v.clone(),
            Grid::Branches(ms) => {
                let top = ms.iter().copied().max().unwrap_or(0);
                let wp = working_points(top, 1.0);
                ms.iter().map(|&m| wp[m - 1].g_o).collect()
            }
        }
    }
}

/// Evolution time: explicit, or a multiple of the gap period
/// `2π/(√Δ_g ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeSpec {
    Fixed(f64),
    Periods(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateConfig {
    pub boson: BosonState,
    pub c_up: C64,
    pub c_down: C64,
}

impl Default for StateConfig {
    fn default() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { boson: BosonState::Canonical, c_up: C64::new(s, 0.0), c_down: C64::new(s, 0.0) }
    }
}

/// Noise rates per sweep: the dephasing list, with each other rate either
/// fixed or `Γ/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub dephasing: Vec<f64>,
    pub qubit_decay: Option<f64>,
    pub boson_decay: Option<f64>,
    pub boson_heating: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { dephasing: vec![0.0, 0.05, 0.1], qubit_decay: None, boson_decay: None, boson_heating: None }
    }
}

impl NoiseConfig {
    pub fn specs(&self) -> Result<Vec<NoiseSpec>> {
        self.dephasing
            .iter()
            .map(|&g| {
                NoiseSpec::new(
                    g,
                    self.qubit_decay.unwrap_or(g / 2.0),
                    self.boson_decay.unwrap_or(g / 2.0),
                    self.boson_heating.unwrap_or(g / 2.0),
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelConfig,
    pub grid: Grid,
    pub n: usize,
    pub time: TimeSpec,
    pub state: StateConfig,
    pub noise: NoiseConfig,
    pub cutoff: CutoffPolicy,
    /// Search for the optimal working point per `η` (finite_eta only).
    pub optimum: bool,
    pub output: Output,
    pub format: OutputFormat,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults reproducing the reference sweeps of each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            model: ModelConfig::default(),
            grid: Grid::Range { min: 0.7, max: 0.95, steps: 8 },
            n: 1,
            time: TimeSpec::Periods(1.0),
            state: StateConfig::default(),
            noise: NoiseConfig::default(),
            cutoff: CutoffPolicy::default(),
            optimum: false,
            output: Output::Stdout,
            format: OutputFormat::Csv,
            workers: None,
        };
        match experiment {
            Experiment::Quadrature | Experiment::Validate => {}
            Experiment::Loschmidt => {
                c.grid = Grid::Branches((1..=6).collect());
                c.state.boson = BosonState::Fock(0);
                c.time = TimeSpec::Periods(2.0);
            }
            Experiment::Qfi => {
                c.grid = Grid::Range { min: 0.5, max: 0.95, steps: 6 };
            }
            Experiment::FiniteEta => {
                c.model.eta = vec![1e2, 1e3, 1e4];
                c.grid = Grid::Range { min: 0.5, max: 0.95, steps: 10 };
                c.cutoff = CutoffPolicy { initial: 32, max: 256 };
            }
            Experiment::Noise => {
                c.model.eta = vec![1e3];
                c.grid = Grid::Range { min: 0.7, max: 0.92, steps: 5 };
                c.cutoff = CutoffPolicy::fixed(48);
            }
        }
        c
    }

    pub fn from_path(path: &Path, experiment: Option<Experiment>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, experiment)
    }

    /// Parses a config; `experiment` (from the command line) takes
    /// precedence over the file's `experiment` key. Unknown keys are logged
    /// and ignored.
    pub fn from_toml(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let file_exp = match table.get("experiment") {
            Some(v) => Some(as_str(v, "experiment")?.parse::<Experiment>()?),
            None => None,
        };
        let exp = match (experiment, file_exp) {
            (Some(cli), Some(file)) if cli != file => {
                log::warn!("config experiment '{file}' overridden by '{cli}'");
                cli
            }
            (Some(e), _) | (None, Some(e)) => e,
            (None, None) => return Err(Error::Config("no experiment given".into())),
        };
        let mut c = Self::defaults(exp);
        for (key, value) in &table {
            match key.as_str() {
                "experiment" => {}
                "n" => c.n = as_usize(value, "n")?,
                "output" => c.output = as_str(value, "output")?.parse()?,
                "format" => c.format = as_str(value, "format")?.parse()?,
                "workers" => c.workers = Some(as_usize(value, "workers")?),
                "model" => c.model = parse_model(as_table(value, "model")?, c.model)?,
                "grid" => {
                    let (grid, optimum) = parse_grid(as_table(value, "grid")?, c.optimum)?;
                    c.grid = grid.unwrap_or(c.grid);
                    c.optimum = optimum;
                }
                "time" => c.time = parse_time(as_table(value, "time")?, c.time)?,
                "state" => c.state = parse_state(as_table(value, "state")?, c.state)?,
                "noise" => c.noise = parse_noise(as_table(value, "noise")?, c.noise)?,
                "cutoff" => c.cutoff = parse_cutoff(as_table(value, "cutoff")?, c.cutoff)?,
                other => log::warn!("ignoring unknown config key '{other}'"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.model.omega > 0.0 && self.model.omega.is_finite()) {
            return Err(Error::Config(format!("omega must be positive (got {})", self.model.omega)));
        }
        if self.model.eta.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config("eta values must be positive".into()));
        }
        if matches!(self.experiment, Experiment::FiniteEta | Experiment::Noise) && self.model.eta.is_empty() {
            return Err(Error::Config(format!("{} needs at least one eta", self.experiment)));
        }
        if self.experiment == Experiment::Noise {
            if self.noise.dephasing.is_empty() {
                return Err(Error::Config("noise needs at least one dephasing rate".into()));
            }
            self.noise.specs().map_err(|e| Error::Config(e.to_string()))?;
        }
        let norm = self.state.c_up.norm_sqr() + self.state.c_down.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Config(format!("qubit amplitudes have norm {norm}")));
        }
        CutoffPolicy::new(self.cutoff.initial, self.cutoff.max).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

fn type_error(key: &str, want: &str, v: &Value) -> Error {
    Error::Config(format!("'{key}' must be {want}, got {}", v.type_str()))
}

fn as_table<'a>(v: &'a Value, key: &str) -> Result<&'a Table> {
    v.as_table().ok_or_else(|| type_error(key, "a table", v))
}

fn as_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| type_error(key, "a string", v))
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(type_error(key, "a number", v)),
    }
}

fn as_usize(v: &Value, key: &str) -> Result<usize> {
    v.as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| type_error(key, "a non-negative integer", v))
}

fn as_bool(v: &Value, key: &str) -> Result<bool> {
    v.as_bool().ok_or_else(|| type_error(key, "a boolean", v))
}

fn as_f64_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(a) => a.iter().map(|x| as_f64(x, key)).collect(),
        _ => Ok(vec![as_f64(v, key)?]),
    }
}

/// A complex number as a number or a `[re, im]` pair.
fn as_complex(v: &Value, key: &str) -> Result<C64> {
    match v {
        Value::Array(a) if a.len() == 2 => Ok(C64::new(as_f64(&a[0], key)?, as_f64(&a[1], key)?)),
        _ => Ok(C64::new(as_f64(v, key)?, 0.0)),
    }
}

fn unknown(section: &str, key: &str) {
    log::warn!("ignoring unknown key '{key}' in [{section}]");
}

fn parse_model(t: &Table, mut m: ModelConfig) -> Result<ModelConfig> {
    for (k, v) in t {
        match k.as_str() {
            "name" | "kind" => m.kind = as_str(v, k)?.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "omega" => m.omega = as_f64(v, k)?,
            "eta" => m.eta = as_f64_list(v, k)?,
            "gamma" => m.gamma = as_f64(v, k)?,
            "kappa" => m.kappa = as_f64(v, k)?,
            _ => unknown("model", k),
        }
    }
    Ok(m)
}

fn parse_grid(t: &Table, optimum: bool) -> Result<(Option<Grid>, bool)> {
    let mut min = None;
    let mut max = None;
    let mut steps = None;
    let mut values = None;
    let mut branches = None;
    let mut optimum = optimum;
    for (k, v) in t {
        match k.as_str() {
            "min" => min = Some(as_f64(v, k)?),
            "max" => max = Some(as_f64(v, k)?),
            "steps" => steps = Some(as_usize(v, k)?),
            "values" => values = Some(as_f64_list(v, k)?),
            "branches" => {
                let list = v.as_array().ok_or_else(|| type_error(k, "a list of integers", v))?;
                branches = Some(list.iter().map(|x| as_usize(x, k)).collect::<Result<Vec<_>>>()?);
            }
            "optimum" => optimum = as_bool(v, k)?,
            _ => unknown("grid", k),
        }
    }
    let given = [min.is_some() || max.is_some() || steps.is_some(), values.is_some(), branches.is_some()];
    if given.iter().filter(|x| **x).count() > 1 {
        return Err(Error::Config("grid takes one of min/max/steps, values or branches".into()));
    }
    let grid = if let Some(v) = values {
        Some(Grid::Values(v))
    } else if let Some(b) = branches {
        Some(Grid::Branches(b))
    } else if given[0] {
        match (min, max, steps) {
            (Some(min), Some(max), Some(steps)) => Some(Grid::Range { min, max, steps }),
            _ => return Err(Error::Config("grid range needs min, max and steps".into())),
        }
    } else {
        None
    };
    if let Some(g) = &grid {
        g.validate()?;
    }
    Ok((grid, optimum))
}

fn parse_time(t: &Table, current: TimeSpec) -> Result<TimeSpec> {
    let mut out = current;
    let mut seen = 0;
    for (k, v) in t {
        match k.as_str() {
            "t" | "fixed" => {
                out = TimeSpec::Fixed(as_f64(v, k)?);
                seen += 1;
            }
            "periods" => {
                out = TimeSpec::Periods(as_f64(v, k)?);
                seen += 1;
            }
            _ => unknown("time", k),
        }
    }
    if seen > 1 {
        return Err(Error::Config("time takes either t or periods".into()));
    }
    match out {
        TimeSpec::Fixed(x) | TimeSpec::Periods(x) if !(x >= 0.0 && x.is_finite()) => {
            Err(Error::Config(format!("time must be finite and >= 0 (got {x})")))
        }
        _ => Ok(out),
    }
}

fn parse_state(t: &Table, mut s: StateConfig) -> Result<StateConfig> {
    for (k, v) in t {
        match k.as_str() {
            "boson" => {
                s.boson = match as_str(v, k)? {
                    "canonical" => BosonState::Canonical,
                    "vacuum" => BosonState::Fock(0),
                    other => return Err(Error::Config(format!("unknown boson state '{other}'"))),
                }
            }
            "fock" => s.boson = BosonState::Fock(as_usize(v, k)?),
            "coherent" => s.boson = BosonState::Coherent(as_complex(v, k)?),
            "c_up" => s.c_up = as_complex(v, k)?,
            "c_down" => s.c_down = as_complex(v, k)?,
            _ => unknown("state", k),
        }
    }
    Ok(s)
}

fn parse_noise(t: &Table, mut n: NoiseConfig) -> Result<NoiseConfig> {
    for (k, v) in t {
        match k.as_str() {
            "dephasing" => n.dephasing = as_f64_list(v, k)?,
            "qubit_decay" => n.qubit_decay = Some(as_f64(v, k)?),
            "boson_decay" => n.boson_decay = Some(as_f64(v, k)?),
            "boson_heating" => n.boson_heating = Some(as_f64(v, k)?),
            _ => unknown("noise", k),
        }
    }
    Ok(n)
}

fn parse_cutoff(t: &Table, mut c: CutoffPolicy) -> Result<CutoffPolicy> {
    for (k, v) in t {
        match k.as_str() {
            "initial" => c.initial = as_usize(v, k)?,
            "max" => c.max = as_usize(v, k)?,
            "fixed" => c = CutoffPolicy::fixed(as_usize(v, k)?),
            _ => unknown("cutoff", k),
        }
    }
    Ok(c)
}
