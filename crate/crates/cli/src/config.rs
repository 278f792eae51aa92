use std::f64::consts::PI;
use std::path::PathBuf;

use genfn_core::eps_core::DyadicGrid;
use genfn_core::genfunc::{NodeSpec, SmoothSpec, TestFunction, DEFAULT_DOMAIN};
use genfn_core::profiles::{ProfileSpec, HEAVISIDE_TAGS};
use genfn_core::riemann::{forward_constructed_datum, SystemData};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::registry::Kind;

/// Top level of a config file; `params` is checked against the schema of
/// `kind` in a second pass so errors carry the full field path.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    #[serde(default)]
    params: Option<Value>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default = "yes")]
    deterministic: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output_dir: Option<PathBuf>,
    /// Keeps wall-clock data out of every artifact, manifest included.
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    EpsTable(EpsTableParams),
    Moments(MomentsParams),
    Association(AssociationParams),
    SqrtDelta(SqrtDeltaParams),
    RiemannScalar(RiemannScalarParams),
    RiemannSystem(RiemannSystemParams),
    ViscousOracle(ViscousOracleParams),
    PreyPredator(PreyPredatorParams),
    HeatForward(HeatForwardParams),
    HeatBackwardSeries(HeatBackwardSeriesParams),
    IllposedFamily(IllposedFamilyParams),
    GodunovScalar(GodunovScalarParams),
    GodunovSystem(GodunovSystemParams),
}

fn typed<T: DeserializeOwned>(params: Value) -> CliResult<T> {
    serde_path_to_error::deserialize(params).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            "params".to_string()
        } else {
            format!("params.{inner}")
        };
        CliError::config(path, e.into_inner().to_string())
    })
}

fn plain<T: Serialize>(p: &T) -> Value {
    serde_json::to_value(p).expect("parameters serialize")
}

impl Experiment {
    pub fn kind(&self) -> Kind {
        match self {
            Experiment::EpsTable(_) => Kind::EpsTable,
            Experiment::Moments(_) => Kind::Moments,
            Experiment::Association(_) => Kind::Association,
            Experiment::SqrtDelta(_) => Kind::SqrtDelta,
            Experiment::RiemannScalar(_) => Kind::RiemannScalar,
            Experiment::RiemannSystem(_) => Kind::RiemannSystem,
            Experiment::ViscousOracle(_) => Kind::ViscousOracle,
            Experiment::PreyPredator(_) => Kind::PreyPredator,
            Experiment::HeatForward(_) => Kind::HeatForward,
            Experiment::HeatBackwardSeries(_) => Kind::HeatBackwardSeries,
            Experiment::IllposedFamily(_) => Kind::IllposedFamily,
            Experiment::GodunovScalar(_) => Kind::GodunovScalar,
            Experiment::GodunovSystem(_) => Kind::GodunovSystem,
        }
    }

    pub fn from_params(kind: Kind, params: Value) -> CliResult<Self> {
        Ok(match kind {
            Kind::EpsTable => Experiment::EpsTable(typed(params)?),
            Kind::Moments => Experiment::Moments(typed(params)?),
            Kind::Association => Experiment::Association(typed(params)?),
            Kind::SqrtDelta => Experiment::SqrtDelta(typed(params)?),
            Kind::RiemannScalar => Experiment::RiemannScalar(typed(params)?),
            Kind::RiemannSystem => Experiment::RiemannSystem(typed(params)?),
            Kind::ViscousOracle => Experiment::ViscousOracle(typed(params)?),
            Kind::PreyPredator => Experiment::PreyPredator(typed(params)?),
            Kind::HeatForward => Experiment::HeatForward(typed(params)?),
            Kind::HeatBackwardSeries => Experiment::HeatBackwardSeries(typed(params)?),
            Kind::IllposedFamily => Experiment::IllposedFamily(typed(params)?),
            Kind::GodunovScalar => Experiment::GodunovScalar(typed(params)?),
            Kind::GodunovSystem => Experiment::GodunovSystem(typed(params)?),
        })
    }

    pub fn defaults(kind: Kind) -> Self {
        Self::from_params(kind, Value::Object(Map::new())).expect("defaults deserialize")
    }

    pub fn params_value(&self) -> Value {
        match self {
            Experiment::EpsTable(p) => plain(p),
            Experiment::Moments(p) => plain(p),
            Experiment::Association(p) => plain(p),
            Experiment::SqrtDelta(p) => plain(p),
            Experiment::RiemannScalar(p) => plain(p),
            Experiment::RiemannSystem(p) => plain(p),
            Experiment::ViscousOracle(p) => plain(p),
            Experiment::PreyPredator(p) => plain(p),
            Experiment::HeatForward(p) => plain(p),
            Experiment::HeatBackwardSeries(p) => plain(p),
            Experiment::IllposedFamily(p) => plain(p),
            Experiment::GodunovScalar(p) => plain(p),
            Experiment::GodunovSystem(p) => plain(p),
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            output_dir: None,
            deterministic: true,
        }
    }

    /// Parses a config (or the `config` member of an emitted manifest) and
    /// applies `key=value` overrides first.
    pub fn from_json(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::config("$", e.to_string()))?;
        if let Some(inner) = value.get("config").filter(|_| value.get("manifest_version").is_some()) {
            value = inner.clone();
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> CliResult<Self> {
        let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { "$".into() } else { path }, e.into_inner().to_string())
        })?;
        let kind: Kind = raw.kind.parse()?;
        let params = match raw.params {
            None | Some(Value::Null) => Value::Object(Map::new()),
            Some(p) => p,
        };
        Ok(Self {
            experiment: Experiment::from_params(kind, params)?,
            output_dir: raw.output_dir,
            deterministic: raw.deterministic,
        })
    }

    /// Fully resolved form, defaults included; keys come out sorted.
    pub fn resolved(&self) -> Value {
        let mut m = Map::new();
        m.insert("kind".into(), Value::String(self.experiment.kind().name().into()));
        m.insert("params".into(), self.experiment.params_value());
        m.insert(
            "output_dir".into(),
            self.output_dir
                .as_ref()
                .map_or(Value::Null, |p| Value::String(p.display().to_string())),
        );
        m.insert("deterministic".into(), Value::Bool(self.deterministic));
        Value::Object(m)
    }
}

const TOP_LEVEL: [&str; 4] = ["kind", "params", "output_dir", "deterministic"];

/// `a.b.0.c=value`; paths that do not start with a top-level key are taken
/// relative to `params`. The value is parsed as JSON, falling back to a
/// plain string.
pub fn apply_override(config: &mut Value, spec: &str) -> CliResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(spec, "override must look like key=value"))?;
    let mut parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(key, "empty path segment"));
    }
    if !TOP_LEVEL.contains(&parts[0]) {
        parts.insert(0, "params");
    }
    let new = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = config;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        cur = match cur {
            Value::Object(m) => {
                if last {
                    m.insert(part.to_string(), new);
                    return Ok(());
                }
                m.entry(part.to_string()).or_insert(Value::Null)
            }
            Value::Array(a) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| CliError::config(key, format!("`{part}` is not an array index")))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| CliError::config(key, format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = new;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(CliError::config(
                    key,
                    format!("`{part}` does not address an object or array"),
                ))
            }
        };
    }
    unreachable!("the loop returns on the last segment")
}

// ---------------------------------------------------------------------------
// Per-kind parameters. Every struct is fully defaulted.

fn pairing_grid() -> DyadicGrid {
    DyadicGrid::coarse(0.5, 40, 12)
}

fn tanh() -> ProfileSpec {
    ProfileSpec::new("tanh")
}

fn heaviside_node(tag: &str) -> NodeSpec {
    NodeSpec::Heaviside {
        center: 0.0,
        profile: ProfileSpec::new(tag),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsTableParams {
    pub grid: DyadicGrid,
    /// Number of dyadic samples in the plot file.
    pub plot_points: usize,
}

impl Default for EpsTableParams {
    fn default() -> Self {
        Self {
            grid: DyadicGrid::default(),
            plot_points: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsParams {
    pub presets: Vec<ProfileSpec>,
    pub orders: Vec<u32>,
    /// Grid over which the `int (K^2 - K) K'` identity is checked.
    pub integral_grid: DyadicGrid,
}

impl Default for MomentsParams {
    fn default() -> Self {
        Self {
            presets: HEAVISIDE_TAGS.iter().map(|t| ProfileSpec::new(t)).collect(),
            orders: (0..=8).collect(),
            integral_grid: DyadicGrid::coarse(0.5, 12, 4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationParams {
    pub u: NodeSpec,
    pub v: NodeSpec,
    pub domain: (f64, f64),
    /// Test functions; empty selects the default battery of the domain.
    pub battery: Vec<TestFunction>,
    pub grid: DyadicGrid,
}

impl Default for AssociationParams {
    fn default() -> Self {
        Self {
            u: NodeSpec::Power {
                n: 2,
                arg: Box::new(heaviside_node("tanh")),
            },
            v: heaviside_node("tanh"),
            domain: DEFAULT_DOMAIN,
            battery: Vec::new(),
            grid: pairing_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqrtDeltaParams {
    pub profile: ProfileSpec,
    pub phi: TestFunction,
    pub grid: DyadicGrid,
}

impl Default for SqrtDeltaParams {
    fn default() -> Self {
        Self {
            profile: ProfileSpec::new("bump"),
            phi: TestFunction {
                center: 0.0,
                width: 1.0,
            },
            grid: pairing_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiemannScalarParams {
    pub u_l: f64,
    pub u_r: f64,
    pub profile: ProfileSpec,
    pub phi: TestFunction,
    /// Speeds sampled for the residual plot.
    pub plot_points: usize,
}

impl Default for RiemannScalarParams {
    fn default() -> Self {
        Self {
            u_l: 0.0,
            u_r: 1.0,
            profile: tanh(),
            phi: TestFunction {
                center: 0.0,
                width: 1.5,
            },
            plot_points: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiemannSystemParams {
    /// One tag per equation: `=` (equality in G) or `~` (association).
    pub ledger: String,
    pub data: SystemData,
    pub rho_profile: ProfileSpec,
    /// Classify the residuals of the answer on the default battery.
    pub diagnostics: bool,
    pub strong_search_speeds: usize,
}

impl Default for RiemannSystemParams {
    fn default() -> Self {
        Self {
            ledger: "==~".into(),
            data: forward_constructed_datum(),
            rho_profile: tanh(),
            diagnostics: true,
            strong_search_speeds: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViscousOracleParams {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub data: SystemData,
}

impl Default for ViscousOracleParams {
    fn default() -> Self {
        Self {
            eps1: 1e-3,
            eps2: 1e-3,
            eps3: 1.0,
            data: forward_constructed_datum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreyPredatorParams {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Predator profile.
    pub psi1: ProfileSpec,
    /// Prey profile.
    pub psi2: ProfileSpec,
    /// Regularization scales; the three smallest must halve.
    pub eps_list: Vec<f64>,
    pub t_final: f64,
    pub domain: (f64, f64),
    pub cells_per_eps: usize,
    pub snapshots: usize,
}

impl Default for PreyPredatorParams {
    fn default() -> Self {
        Self {
            alpha1: 2.0,
            alpha2: 2.0,
            psi1: ProfileSpec::new("bump"),
            psi2: ProfileSpec::new("bump"),
            eps_list: vec![0.2, 0.1, 0.05, 0.025],
            t_final: 4.0,
            domain: (-8.0, 8.0),
            cells_per_eps: 32,
            snapshots: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatMode {
    /// Evolve the initial data and compare with the Fourier series.
    Field,
    /// Absorption of a regularized Dirac source over an eps sweep.
    DeltaVanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaVanishingParams {
    pub omega: f64,
    pub t0: f64,
    pub phi: TestFunction,
    pub psi: ProfileSpec,
    pub eps0: f64,
    pub levels: usize,
    pub cells_per_eps: usize,
}

impl Default for DeltaVanishingParams {
    fn default() -> Self {
        Self {
            omega: PI / 2.0,
            t0: 0.1,
            phi: TestFunction {
                center: PI / 2.0,
                width: 1.0,
            },
            psi: ProfileSpec::new("bump"),
            eps0: 0.2,
            levels: 5,
            cells_per_eps: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatForwardParams {
    pub mode: HeatMode,
    /// Initial data on `(0, pi)`.
    pub initial: NodeSpec,
    /// Regularization scale at which the initial data is sampled.
    pub eps: f64,
    pub nonlinear: bool,
    pub diffusivity: f64,
    pub intervals: usize,
    pub times: Vec<f64>,
    /// Sine modes of the Fourier oracle (linear runs only).
    pub oracle_modes: usize,
    pub delta: DeltaVanishingParams,
}

impl Default for HeatForwardParams {
    fn default() -> Self {
        Self {
            mode: HeatMode::Field,
            initial: NodeSpec::Smooth {
                function: SmoothSpec::Poly {
                    coeffs: vec![0.0, PI, -1.0],
                },
            },
            eps: 1.0,
            nonlinear: false,
            diffusivity: 1.0,
            intervals: 400,
            times: vec![0.05, 0.1, 0.5],
            oracle_modes: 101,
            delta: DeltaVanishingParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatBackwardSeriesParams {
    /// `(m, b_m)` pairs of the initial sine series.
    pub modes: Vec<(usize, f64)>,
    pub k: f64,
    pub times: Vec<f64>,
    pub points: usize,
}

impl Default for HeatBackwardSeriesParams {
    fn default() -> Self {
        Self {
            modes: vec![(1, 1.0), (3, 0.1), (10, 1e-3)],
            k: 1.0,
            times: vec![0.0, 0.05, 0.1, 0.2],
            points: 129,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IllposedFamilyParams {
    pub ns: Vec<u32>,
    pub ts: Vec<f64>,
}

impl Default for IllposedFamilyParams {
    fn default() -> Self {
        Self {
            ns: vec![1, 2, 3, 5, 8, 13],
            ts: vec![0.0, -0.1, -0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GodunovScalarParams {
    pub u_l: f64,
    pub u_r: f64,
    pub x0: f64,
    pub domain: (f64, f64),
    pub cells: usize,
    pub cfl: f64,
    pub t_final: f64,
    /// Grids of the shock-position convergence study; empty skips it.
    pub eoc_cells: Vec<usize>,
}

impl Default for GodunovScalarParams {
    fn default() -> Self {
        Self {
            u_l: 1.0,
            u_r: 0.0,
            x0: 0.0,
            domain: (-1.0, 2.0),
            cells: 200,
            cfl: 0.8,
            t_final: 1.0,
            eoc_cells: vec![50, 100, 200, 400],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GodunovSystemParams {
    pub data: SystemData,
    pub x0: f64,
    pub domain: (f64, f64),
    pub cells: usize,
    pub cfl: f64,
    pub t_final: f64,
}

impl Default for GodunovSystemParams {
    fn default() -> Self {
        Self {
            data: forward_constructed_datum(),
            x0: 0.0,
            domain: (-3.0, 1.0),
            cells: 200,
            cfl: 0.45,
            t_final: 1.0,
        }
    }
}
