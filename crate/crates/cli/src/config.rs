//! Run configuration: JSON or TOML text, dotted `--set` overrides, defaults
//! and validation into a [`Model`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thermoshift_core::{AlphabetCutoff, IfsSystem, Interval, MapFamily, Model, Potential, SpectralParams};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_CAP_WORDS: u64 = 1 << 24;
pub const CAP_ENV: &str = "THERMOSHIFT_CAP_WORDS";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{format} parse error: {message}")]
    Parse { format: &'static str, message: String },
    #[error("bad override `{0}`: expected key.path=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_version")]
    pub config_version: u32,
    pub system: SystemSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub pressure: PressureOptions,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub gibbs: GibbsOptions,
    #[serde(default)]
    pub recurrence: RecurrenceOptions,
    #[serde(default)]
    pub dimension: DimensionOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSpec {
    /// Constant potentials log wᵢ on k disjoint maps of slope 1/(2k − 1).
    Bernoulli { weights: Vec<f64> },
    /// Affine maps [slope, offset]; constant potentials log wᵢ when
    /// `weights` is given, s·log|slope| otherwise.
    Affine {
        maps: Vec<[f64; 2]>,
        #[serde(default = "unit_domain")]
        domain: [f64; 2],
        #[serde(default)]
        s_param: Option<f64>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// x ↦ 2⁻ⁱ(1 + x/4) with φ⁽ⁱ⁾ ≡ −i·log 2.
    GeometricTail {},
    /// x ↦ 1/(d + x) with φ⁽ⁱ⁾ = −2s·log(d + x).
    Cf {
        digits: Digits,
        #[serde(default)]
        domain: Option<[f64; 2]>,
        #[serde(default = "one")]
        s_param: f64,
    },
}

fn unit_domain() -> [f64; 2] {
    [0.0, 1.0]
}

fn one() -> f64 {
    1.0
}

/// Either an explicit digit list or a range "a..b" / "a.." (all digits ≥ a).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Digits {
    List(Vec<u32>),
    Range(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// alphabet cutoff N for infinite families
    pub cutoff: u32,
    /// grid cells M
    pub grid: usize,
    pub n_max: usize,
    pub atom_cap: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            cutoff: 50,
            grid: 2048,
            n_max: 10,
            atom_cap: 4096,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

impl Numerics {
    pub fn spectral(&self) -> SpectralParams {
        SpectralParams {
            grid_cells: self.grid,
            atom_cap: self.atom_cap,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureOptions {
    /// symbols for the periodic lower bound and the definition-gap check
    pub probes: Vec<u32>,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions { probes: vec![1] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    pub bounds_n: usize,
    pub profile_n: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            bounds_n: 30,
            profile_n: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsOptions {
    pub depth: usize,
    /// most cylinders a table may hold before its depth is reduced
    pub work_budget: u64,
    /// words drawn for the pathwise entropy cross-check
    pub pathwise_samples: usize,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        GibbsOptions {
            depth: 6,
            work_budget: 1 << 18,
            pathwise_samples: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrenceOptions {
    pub symbols: Vec<u32>,
    pub n_max: usize,
}

impl Default for RecurrenceOptions {
    fn default() -> Self {
        RecurrenceOptions {
            symbols: vec![1, 2],
            n_max: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionOptions {
    pub s_lo: f64,
    pub s_hi: f64,
    pub tol_s: f64,
    pub depth: usize,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        DimensionOptions {
            s_lo: 0.4,
            s_hi: 0.7,
            tol_s: 1e-4,
            depth: 14,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub distortion_samples: usize,
    pub max_word: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            distortion_samples: 10_000,
            max_word: 8,
        }
    }
}

/// Built-in starting points for `--system`.
pub fn preset(tag: &str) -> Result<Value, ConfigError> {
    let system = match tag {
        "bernoulli" => serde_json::json!({"family": "bernoulli", "weights": [0.5, 0.5]}),
        "affine" => serde_json::json!({
            "family": "affine",
            "maps": [[1.0 / 3.0, 0.0], [1.0 / 3.0, 2.0 / 3.0]],
        }),
        "geometric-tail" => serde_json::json!({"family": "geometric-tail"}),
        "cf" => serde_json::json!({
            "family": "cf",
            "digits": [1, 2],
            "domain": [1.0 / 3.0, 1.0],
            "s_param": 0.5313,
        }),
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown system `{other}` (expected bernoulli, affine, geometric-tail or cf)"
            )))
        }
    };
    Ok(serde_json::json!({ "config_version": CONFIG_VERSION, "system": system }))
}

/// Parses JSON or TOML text. With no format hint JSON is tried first.
pub fn parse_text(text: &str, hint: Option<&str>) -> Result<Value, ConfigError> {
    let json = || {
        serde_json::from_str::<Value>(text).map_err(|e| ConfigError::Parse {
            format: "JSON",
            message: e.to_string(),
        })
    };
    let toml = || {
        toml::from_str::<Value>(text).map_err(|e| ConfigError::Parse {
            format: "TOML",
            message: e.to_string(),
        })
    };
    match hint {
        Some("json") => json(),
        Some("toml") => toml(),
        _ if text.trim_start().starts_with('{') => json(),
        _ => toml(),
    }
}

pub fn read_file(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let hint = path.extension().and_then(|e| e.to_str());
    parse_text(&text, hint)
}

/// Applies `a.b.c=value`; the value is read as JSON when it parses, as a
/// bare string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(ConfigError::Override(spec.to_string()));
        }
        node = node
            .as_object_mut()
            .unwrap()
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(map) => {
            map.insert(parts[parts.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(ConfigError::Override(spec.to_string())),
    }
}

/// Fills defaults and validates the version and the system.
pub fn finish(value: Value) -> Result<SystemConfig, ConfigError> {
    let config: SystemConfig = serde_json::from_value(value).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if config.config_version != CONFIG_VERSION {
        return Err(ConfigError::Invalid(format!(
            "unsupported config_version {} (this build reads {CONFIG_VERSION})",
            config.config_version
        )));
    }
    config.validate()?;
    Ok(config)
}

/// Parses configuration text (JSON or TOML) into a validated config.
pub fn load_config(text: &str) -> Result<SystemConfig, ConfigError> {
    finish(parse_text(text, None)?)
}

fn invalid(e: thermoshift_core::Error) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = &self.numerics;
        if n.cutoff == 0 || n.grid == 0 || n.n_max == 0 || n.atom_cap == 0 || n.max_iter == 0 {
            return Err(ConfigError::Invalid(
                "numerics.cutoff, grid, n_max, atom_cap and max_iter must be positive".into(),
            ));
        }
        if !(n.tol > 0.0) {
            return Err(ConfigError::Invalid("numerics.tol must be positive".into()));
        }
        if self.gibbs.depth == 0 {
            return Err(ConfigError::Invalid("gibbs.depth must be at least 1".into()));
        }
        self.model().map(|_| ())
    }

    /// The word cap from THERMOSHIFT_CAP_WORDS, 2²⁴ when unset.
    pub fn cutoff(&self) -> Result<AlphabetCutoff, ConfigError> {
        let cap = match std::env::var(CAP_ENV) {
            Ok(v) => v
                .trim()
                .parse::<u64>()
                .map_err(|_| ConfigError::Invalid(format!("{CAP_ENV}={v} is not a word count")))?,
            Err(_) => DEFAULT_CAP_WORDS,
        };
        AlphabetCutoff::with_cap(self.numerics.cutoff, cap).map_err(invalid)
    }

    pub fn model(&self) -> Result<Model, ConfigError> {
        self.model_at(None)
    }

    /// The family's s parameter, when it has one.
    pub fn s_param(&self) -> Option<f64> {
        match &self.system {
            SystemSpec::Cf { s_param, .. } => Some(*s_param),
            SystemSpec::Affine {
                s_param, weights: None, ..
            } => Some(s_param.unwrap_or(1.0)),
            _ => None,
        }
    }

    /// Builds the model, replacing the family's s parameter when `s` is given.
    pub fn model_at(&self, s: Option<f64>) -> Result<Model, ConfigError> {
        let (system, potential) = match &self.system {
            SystemSpec::Bernoulli { weights } => {
                let k = weights.len();
                if k == 0 {
                    return Err(ConfigError::Invalid("bernoulli needs at least one weight".into()));
                }
                let slope = 1.0 / (2 * k - 1) as f64;
                let maps: Vec<(f64, f64)> = (0..k).map(|j| (slope, 2.0 * j as f64 * slope)).collect();
                let sys = IfsSystem::new(Interval::unit(), MapFamily::affine(&maps)).map_err(invalid)?;
                (sys, constant(weights)?)
            }
            SystemSpec::Affine {
                maps,
                domain,
                s_param,
                weights,
            } => {
                let pairs: Vec<(f64, f64)> = maps.iter().map(|m| (m[0], m[1])).collect();
                let dom = Interval::new(domain[0], domain[1]).map_err(invalid)?;
                let sys = IfsSystem::new(dom, MapFamily::affine(&pairs)).map_err(invalid)?;
                let potential = match weights {
                    Some(w) => constant(w)?,
                    None => Potential::Geometric {
                        s: s.or(*s_param).unwrap_or(1.0),
                    },
                };
                (sys, potential)
            }
            SystemSpec::GeometricTail {} => (
                IfsSystem::new(Interval::unit(), MapFamily::GeometricTail).map_err(invalid)?,
                Potential::LinearTail {
                    rate: std::f64::consts::LN_2,
                },
            ),
            SystemSpec::Cf {
                digits,
                domain,
                s_param,
            } => {
                let (family, lo_digit, hi_digit) = cf_family(digits)?;
                if lo_digit == 0 {
                    return Err(ConfigError::Invalid(
                        "continued-fraction digits must be at least 1".into(),
                    ));
                }
                let dom = match domain {
                    Some(d) => Interval::new(d[0], d[1]).map_err(invalid)?,
                    None => match hi_digit {
                        Some(hi) => Interval::new(1.0 / (hi as f64 + 1.0), 1.0 / lo_digit as f64),
                        None => Interval::new(0.0, 1.0 / lo_digit as f64),
                    }
                    .map_err(invalid)?,
                };
                let sys = IfsSystem::new(dom, family).map_err(invalid)?;
                (
                    sys,
                    Potential::Geometric {
                        s: s.unwrap_or(*s_param),
                    },
                )
            }
        };
        Model::new(system, potential).map_err(invalid)
    }
}

fn constant(weights: &[f64]) -> Result<Potential, ConfigError> {
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(ConfigError::Invalid(format!("weight {w} is not a positive number")));
    }
    Ok(Potential::Constant {
        values: weights.iter().map(|w| w.ln()).collect(),
    })
}

/// Map family plus the smallest and (if finite) largest digit.
fn cf_family(digits: &Digits) -> Result<(MapFamily, u32, Option<u32>), ConfigError> {
    match digits {
        Digits::List(list) => {
            if list.is_empty() {
                return Err(ConfigError::Invalid("cf needs at least one digit".into()));
            }
            let lo = *list.iter().min().unwrap();
            let hi = *list.iter().max().unwrap();
            Ok((MapFamily::continued_fraction(list), lo, Some(hi)))
        }
        Digits::Range(text) => {
            let bad = || ConfigError::Invalid(format!("digit range `{text}` is not of the form a..b or a.."));
            let (a, b) = text.split_once("..").ok_or_else(bad)?;
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            if b.trim().is_empty() {
                return Ok((MapFamily::ContinuedFractionTail { first_digit: a }, a, None));
            }
            let b: u32 = b.trim().parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            let list: Vec<u32> = (a..=b).collect();
            Ok((MapFamily::continued_fraction(&list), a, Some(b)))
        }
    }
}
