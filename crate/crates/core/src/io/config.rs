//! Run configuration documents.
//!
//! A run config is one TOML document:
//!
//! ```toml
//! format_version = 1
//! n_steps = 2000
//!
//! [world]
//! seed = 7
//! class = "rediff"
//!
//! [[recipes]]
//! recipe = "120 * (60, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)"
//! radius = 150.0
//!
//! [observers]
//! hash_interval = 100
//! ```
//!
//! Loading reports every problem at once, each tagged with its field path.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{HarvestConfig, WindowConfig};
use crate::engine::{EngineError, World, WorldConfig};
use crate::geometry::Vector;
use crate::recipe::{parse_recipe_with, serialize_recipe, Recipe};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// What a replay log stores besides the header and hashes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    /// Full snapshots at every hash point.
    #[default]
    Full,
    /// Hashes only; replay re-simulates from the header.
    Header,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverConfig {
    /// Record a frame every this many steps; 0 disables frame recording.
    pub frame_interval: u64,
    pub hash_interval: u64,
    pub analytics: WindowConfig,
    pub harvest: Option<HarvestConfig>,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig { frame_interval: 0, hash_interval: 100, analytics: WindowConfig::default(), harvest: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub replay_log: Option<PathBuf>,
    pub record_mode: RecordMode,
    pub event_log: Option<PathBuf>,
}

/// A recipe plus where to place it.
#[derive(Debug, Clone, PartialEq)]
pub struct Spawn {
    pub recipe: Recipe,
    pub center: Vector,
    pub radius: f64,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub world: WorldConfig,
    pub spawns: Vec<Spawn>,
    pub n_steps: u64,
    pub observers: ObserverConfig,
    pub output: OutputConfig,
}

pub const DEFAULT_N_STEPS: u64 = 1000;
pub const DEFAULT_SPAWN_RADIUS: f64 = 100.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpawn {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    recipe: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    format_version: u32,
    #[serde(default)]
    n_steps: Option<i64>,
    #[serde(default)]
    world: WorldConfig,
    #[serde(default)]
    recipes: Vec<RawSpawn>,
    #[serde(default)]
    observers: ObserverConfig,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported config format_version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("invalid config:\n  {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<FieldError>),
}

impl ConfigError {
    pub fn paths(&self) -> Vec<&str> {
        match self {
            ConfigError::Invalid(v) => v.iter().map(|e| e.path.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_config(&text, path.parent())
}

/// Parse a config document; relative recipe files resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let version = table.get("format_version").and_then(|v| v.as_integer());
    match version {
        None => {
            return Err(ConfigError::Invalid(vec![FieldError {
                path: "format_version".into(),
                message: "missing".into(),
            }]))
        }
        Some(v) if v != CONFIG_FORMAT_VERSION as i64 => {
            return Err(ConfigError::Version { found: v as u32, supported: CONFIG_FORMAT_VERSION })
        }
        _ => {}
    }
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    validate(raw, base_dir)
}

fn validate(raw: RawConfig, base_dir: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let mut errors = Vec::new();
    let mut push = |path: String, message: String| errors.push(FieldError { path, message });
    for (path, message) in raw.world.problems() {
        push(format!("world.{path}"), message);
    }
    let n_steps = match raw.n_steps {
        None => DEFAULT_N_STEPS,
        Some(n) if n < 0 => {
            push("n_steps".into(), format!("must be >= 0, got {n}"));
            0
        }
        Some(n) => n as u64,
    };
    if raw.observers.hash_interval == 0 {
        push("observers.hash_interval".into(), "must be at least 1".into());
    }
    if raw.observers.analytics.sample == 0 {
        push("observers.analytics.sample".into(), "must be at least 1".into());
    }
    if let Some(h) = &raw.observers.harvest {
        for (f, m) in h.problems() {
            push(format!("observers.harvest.{f}"), m);
        }
    }
    if raw.recipes.is_empty() {
        push("recipes".into(), "at least one recipe is required".into());
    }
    let space = raw.world.space();
    let mut spawns = Vec::new();
    for (i, s) in raw.recipes.iter().enumerate() {
        let at = format!("recipes[{i}]");
        let text = match (&s.recipe, &s.file) {
            (Some(t), None) => Some(t.clone()),
            (None, Some(f)) => {
                let full = match base_dir {
                    Some(b) if f.is_relative() => b.join(f),
                    _ => f.clone(),
                };
                match std::fs::read_to_string(&full) {
                    Ok(t) => Some(t),
                    Err(e) => {
                        push(format!("{at}.file"), format!("cannot read {}: {e}", full.display()));
                        None
                    }
                }
            }
            _ => {
                push(at.clone(), "exactly one of `recipe` or `file` is required".into());
                None
            }
        };
        let recipe = text.and_then(|t| match parse_recipe_with(&t, &raw.world.ranges) {
            Ok(r) => Some(r),
            Err(e) => {
                let fields = e.fields();
                let suffix = if fields.is_empty() { String::new() } else { format!(" [{}]", fields.join(", ")) };
                push(format!("{at}.recipe"), format!("{e}{suffix}"));
                None
            }
        });
        let mut center = space.center();
        if let Some(c) = &s.center {
            if c.len() != raw.world.dimensionality {
                push(format!("{at}.center"), format!("expected {} components, got {}", raw.world.dimensionality, c.len()));
            } else {
                for (k, x) in c.iter().enumerate() {
                    center[k] = *x;
                }
            }
        }
        let radius = s.radius.unwrap_or(DEFAULT_SPAWN_RADIUS);
        if !(radius.is_finite() && radius >= 0.0) {
            push(format!("{at}.radius"), format!("must be >= 0, got {radius}"));
        }
        if let Some(recipe) = recipe {
            spawns.push(Spawn { recipe, center, radius });
        }
    }
    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors));
    }
    Ok(RunConfig { world: raw.world, spawns, n_steps, observers: raw.observers, output: raw.output })
}

impl RunConfig {
    /// Minimal config: one recipe, every other setting at its default.
    pub fn single(world: WorldConfig, recipe: Recipe) -> Self {
        let center = world.space().center();
        RunConfig {
            world,
            spawns: vec![Spawn { recipe, center, radius: DEFAULT_SPAWN_RADIUS }],
            n_steps: DEFAULT_N_STEPS,
            observers: ObserverConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Fresh world with every recipe spawned in order.
    pub fn build_world(&self) -> Result<World, EngineError> {
        let mut world = World::new(self.world.clone())?;
        for s in &self.spawns {
            world.spawn(&s.recipe, s.center, s.radius)?;
        }
        Ok(world)
    }

    fn to_raw(&self) -> RawConfig {
        let dim = self.world.dimensionality.clamp(1, 3);
        RawConfig {
            format_version: CONFIG_FORMAT_VERSION,
            n_steps: Some(self.n_steps as i64),
            world: self.world.clone(),
            recipes: self
                .spawns
                .iter()
                .map(|s| RawSpawn {
                    recipe: Some(serialize_recipe(&s.recipe)),
                    file: None,
                    center: Some(s.center[..dim].to_vec()),
                    radius: Some(s.radius),
                })
                .collect(),
            observers: self.observers.clone(),
            output: self.output.clone(),
        }
    }
}

/// Canonical document: every default spelled out, recipes inlined.
pub fn config_to_string(config: &RunConfig) -> String {
    toml::to_string(&config.to_raw()).expect("config serializes")
}

pub fn save_config(config: &RunConfig, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, config_to_string(config))
}
