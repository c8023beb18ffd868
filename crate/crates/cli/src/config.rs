use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use veil_core::rng::Subinterval;
use veil_core::FairnessFunctional;

use crate::failure::Failure;

/// `rho` may be `-inf`, which JSON has no number for.
pub mod rho {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(if *x < 0.0 { "-inf" } else { "inf" })
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| serde::de::Error::custom(format!("rho: cannot parse {s:?}"))),
        }
    }
}

/// Reads a config file. A run manifest is accepted too and replays its
/// recorded config.
pub fn load_value(path: &Path, command: &str) -> Result<Value, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("reading config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    if let (Some(cmd), Some(cfg)) = (value.get("command"), value.get("config")) {
        if cmd.as_str() != Some(command) {
            return Err(Failure::usage(format!(
                "manifest {} was written by `{}`, not `{command}`",
                path.display(),
                cmd
            )));
        }
        return Ok(cfg.clone());
    }
    Ok(value)
}

pub fn parse<C: DeserializeOwned>(value: Value, what: &str) -> Result<C, Failure> {
    serde_json::from_value(value).map_err(|e| Failure::usage(format!("invalid {what} config: {e}")))
}

pub fn load_or_default<C: DeserializeOwned + Default>(
    path: Option<&Path>,
    command: &str,
) -> Result<C, Failure> {
    match path {
        Some(p) => parse(load_value(p, command)?, command),
        None => Ok(C::default()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub machine: u8,
    pub n: u64,
    pub seed: u64,
    /// Measure of `[0, p]` for the first machine when no subset is given.
    pub p: f64,
    pub subset: Option<Vec<Subinterval<f64>>>,
    pub phi: f64,
    pub psi: f64,
    pub x0: f64,
    pub gamma: f64,
    pub threshold: f64,
    pub fee_per_draw: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        let m = veil_core::MachineTwoConfig::default();
        Self {
            machine: 2,
            n: 100_000,
            seed: m.seed,
            p: 0.5,
            subset: None,
            phi: m.phi,
            psi: m.psi,
            x0: m.location_x0,
            gamma: m.scale_gamma,
            threshold: 0.5,
            fee_per_draw: m.fee_per_draw,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    pub input: Option<PathBuf>,
    pub windows: Vec<usize>,
    pub min_window: usize,
    /// Defaults to a tenth of the shortest window.
    pub stride: Option<usize>,
    pub epsilon: f64,
    /// Defaults to the first window.
    pub trace_window: Option<usize>,
    pub trace_stride: Option<usize>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            input: None,
            windows: vec![10_000],
            min_window: veil_core::freq::DEFAULT_MIN_WINDOW,
            stride: None,
            epsilon: 0.1,
            trace_window: None,
            trace_stride: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameConfig {
    pub lambda: f64,
    pub grid_step: f64,
    pub sweep_step: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            grid_step: veil_core::game::DEFAULT_GRID_STEP,
            sweep_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub r1: f64,
    pub r2: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CfmmConfig {
    /// Defaults to a pool of `pool_depth` token 1 priced at the bracket mid.
    pub pool: Option<PoolSpec>,
    pub pool_depth: f64,
    pub p_low: f64,
    pub p_high: f64,
    pub alpha: f64,
    #[serde(with = "rho")]
    pub rho: f64,
    pub depth: usize,
    pub trade_grid: f64,
    /// Search against set-valued acceptance instead of point acceptance.
    pub veiled: bool,
    pub grid_points: usize,
}

impl Default for CfmmConfig {
    fn default() -> Self {
        Self {
            pool: None,
            pool_depth: veil_core::oracle::DEFAULT_POOL_DEPTH,
            p_low: 1.0,
            p_high: 2.0,
            alpha: 0.5,
            rho: 1.0,
            depth: veil_core::cfmm::DEFAULT_DEPTH,
            trade_grid: veil_core::oracle::DEFAULT_TRADE_GRID,
            veiled: false,
            grid_points: veil_core::cfmm::DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeEntry {
    pub alpha: f64,
    #[serde(with = "rho")]
    pub rho: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum DesignName {
    #[serde(rename = "AVG")]
    Avg,
    #[serde(rename = "VEIL")]
    Veil,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineParams {
    pub phi: f64,
    pub psi: f64,
    pub x0: f64,
    pub gamma: f64,
}

impl Default for MachineParams {
    fn default() -> Self {
        let m = veil_core::MachineTwoConfig::default();
        Self {
            phi: m.phi,
            psi: m.psi,
            x0: m.location_x0,
            gamma: m.scale_gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinationSpec {
    pub lambda: f64,
    #[serde(default = "default_game_step")]
    pub grid_step: f64,
}

fn default_game_step() -> f64 {
    veil_core::game::DEFAULT_GRID_STEP
}

fn default_design() -> DesignName {
    DesignName::Veil
}

fn default_fairness() -> FairnessFunctional {
    FairnessFunctional::average()
}

fn default_pool_depth() -> f64 {
    veil_core::oracle::DEFAULT_POOL_DEPTH
}

fn default_depth() -> usize {
    veil_core::cfmm::DEFAULT_DEPTH
}

fn default_trade_grid() -> f64 {
    veil_core::oracle::DEFAULT_TRADE_GRID
}

fn default_grid_points() -> usize {
    veil_core::cfmm::DEFAULT_GRID_POINTS
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SettlementName {
    #[default]
    Endpoint,
    Veiled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "p_S")]
    pub p_s: f64,
    #[serde(rename = "p_N")]
    pub p_n: f64,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default = "default_design")]
    pub design: DesignName,
    pub population: Vec<TypeEntry>,
    #[serde(default = "default_fairness")]
    pub fairness: FairnessFunctional,
    #[serde(default = "default_pool_depth")]
    pub pool_depth: f64,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_trade_grid")]
    pub trade_grid: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub settlement: SettlementName,
    #[serde(default)]
    pub machine: MachineParams,
    #[serde(default)]
    pub coordination: Option<CoordinationSpec>,
}

const SCENARIO_REQUIRED: &[&str] = &["p_S", "p_N", "epochs", "seed", "population"];
const SCENARIO_OPTIONAL: &[&str] = &[
    "design",
    "fairness",
    "pool_depth",
    "depth",
    "trade_grid",
    "grid_points",
    "settlement",
    "machine",
    "coordination",
];

/// Parses a scenario, naming every missing, unknown or out-of-range field.
pub fn parse_scenario(value: Value) -> Result<ScenarioConfig, Failure> {
    let Some(obj) = value.as_object() else {
        return Err(Failure::usage("scenario must be a JSON object"));
    };
    let mut problems: Vec<String> = SCENARIO_REQUIRED
        .iter()
        .filter(|k| !obj.contains_key(**k))
        .map(|k| format!("missing field `{k}`"))
        .collect();
    problems.extend(
        obj.keys()
            .filter(|k| !SCENARIO_REQUIRED.contains(&k.as_str()) && !SCENARIO_OPTIONAL.contains(&k.as_str()))
            .map(|k| format!("unknown field `{k}`")),
    );
    type Check = fn(&Value) -> bool;
    let scalars: [(&str, Check, &str); 4] = [
        ("p_S", Value::is_number, "a number"),
        ("p_N", Value::is_number, "a number"),
        ("epochs", Value::is_u64, "a nonnegative integer"),
        ("seed", Value::is_u64, "a nonnegative integer"),
    ];
    for (key, valid, what) in scalars {
        if obj.get(key).is_some_and(|v| !valid(v)) {
            problems.push(format!("`{key}` must be {what}"));
        }
    }
    if !problems.is_empty() {
        return Err(Failure::usage(format!("invalid scenario: {}", problems.join("; "))));
    }
    let sc: ScenarioConfig = parse(value, "scenario")?;
    let mut bad = Vec::new();
    if !(sc.p_s > 0.0 && sc.p_s.is_finite()) {
        bad.push(format!("`p_S` = {} must be positive", sc.p_s));
    }
    if !(sc.p_n >= sc.p_s && sc.p_n.is_finite()) {
        bad.push(format!("`p_N` = {} must be at least `p_S` = {}", sc.p_n, sc.p_s));
    }
    if sc.population.is_empty() {
        bad.push("`population` is empty".into());
    }
    for (i, t) in sc.population.iter().enumerate() {
        if !(0.0..=1.0).contains(&t.alpha) {
            bad.push(format!("`population[{i}].alpha` = {} outside [0, 1]", t.alpha));
        }
        if t.rho.is_nan() || t.rho == f64::INFINITY {
            bad.push(format!("`population[{i}].rho` = {} must be finite or -inf", t.rho));
        }
        if !(t.weight >= 0.0) {
            bad.push(format!("`population[{i}].weight` = {} is negative", t.weight));
        }
    }
    let total: f64 = sc.population.iter().map(|t| t.weight).sum();
    if !sc.population.is_empty() && (total - 1.0).abs() > veil_core::oracle::WEIGHT_SUM_TOL {
        bad.push(format!("`population` weights sum to {total}, not 1"));
    }
    if !(sc.pool_depth > 0.0) {
        bad.push(format!("`pool_depth` = {} must be positive", sc.pool_depth));
    }
    if sc.depth < 2 {
        bad.push(format!("`depth` = {} must be at least 2", sc.depth));
    }
    if !(sc.trade_grid > 0.0) {
        bad.push(format!("`trade_grid` = {} must be positive", sc.trade_grid));
    }
    if sc.grid_points == 0 {
        bad.push("`grid_points` must be positive".into());
    }
    if let Some(c) = &sc.coordination {
        if !(c.lambda > 0.0 && c.lambda < 1.0) {
            bad.push(format!("`coordination.lambda` = {} outside (0, 1)", c.lambda));
        }
    }
    if !bad.is_empty() {
        return Err(Failure::usage(format!("invalid scenario: {}", bad.join("; "))));
    }
    Ok(sc)
}
