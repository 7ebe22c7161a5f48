//! Run configuration: one TOML file plus `--set key=value` overrides.
//!
//! ```toml
//! model = "flexwing"
//! output_dir = "out"
//!
//! [params]            # model parameters, checked by the model factory
//! sigma = 2.0
//!
//! [basis]
//! modes_real = 4
//! modes_complex = 5
//!
//! [rom]
//! order = 2
//!
//! [simulate]
//! dt = 1e-4
//! rom_dt = 1e-2
//! t_end = 12.0
//!
//! [gust]
//! kind = "one-minus-cosine"
//! wg_max = 1.25
//! t_g = 2.0
//!
//! [sweep]
//! parameter = "gust.t_g"
//! start = 0.5
//! stop = 20.0
//! count = 37
//! ```

use std::path::{Path, PathBuf};

use nmor_core::gust::GustSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Configuration problems; mapped to their own exit code.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid override `{0}` (expected key=value)")]
    Override(String),
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimConfig {
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub fd_step: Option<f64>,
    /// Central-difference step for the trim Jacobian used by the eigensolver.
    pub jacobian_step: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub modes_real: Option<usize>,
    pub modes_complex: Option<usize>,
    pub origin_radius: Option<f64>,
    /// "damping" or "frequency".
    pub ranking: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomConfig {
    pub order: Option<u32>,
    pub epsilon: Option<f64>,
    pub epsilon_cubic: Option<f64>,
    /// Load this archive instead of building a new model.
    pub archive: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    #[default]
    Both,
    Fom,
    Rom,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub dt: Option<f64>,
    /// ROM step; defaults to `dt`.
    pub rom_dt: Option<f64>,
    pub t_end: Option<f64>,
    /// Output sampling interval in model time; defaults to the larger step.
    pub output_interval: Option<f64>,
    #[serde(default)]
    pub run: RunKind,
    /// Initial perturbation as `[state_index, value]` pairs.
    #[serde(default)]
    pub perturbation: Vec<(usize, f64)>,
    /// Start the full model from the basis projection of the perturbation.
    #[serde(default = "yes")]
    pub project_initial: bool,
    /// Write state histories (large).
    #[serde(default)]
    pub record_states: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dotted config key varied across cases, e.g. `gust.t_g` or `params.sigma`.
    pub parameter: String,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
}

impl SweepConfig {
    pub fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        let bad = |reason: &str| ConfigError::Value {
            key: "sweep".into(),
            reason: reason.into(),
        };
        let grid = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) if n >= 1 => {
                if n == 1 {
                    vec![a]
                } else {
                    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
                }
            }
            _ => return Err(bad("give either `values` or all of `start`, `stop`, `count`")),
        };
        if grid.is_empty() {
            return Err(bad("parameter grid is empty"));
        }
        Ok(grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default)]
    pub trim: TrimConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub rom: RomConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    pub gust: Option<GustSpec>,
    pub sweep: Option<SweepConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("nmor-out")
}

/// Parses a right-hand side as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn get_dotted<'a>(table: &'a toml::Table, key: &str) -> Option<&'a toml::Value> {
    let (head, last) = match key.rsplit_once('.') {
        Some((h, l)) => (Some(h), l),
        None => (None, key),
    };
    let mut cur = table;
    if let Some(h) = head {
        for p in h.split('.') {
            cur = cur.get(p)?.as_table()?;
        }
    }
    cur.get(last)
}

/// Sets a dotted key in a table, creating intermediate tables.
pub fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(key.to_string()));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError::Value {
            key: key.to_string(),
            reason: format!("`{p}` is not a table"),
        })?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Builds a configuration from file text and `key=value` overrides
    /// (later overrides win).
    pub fn from_sources(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.clone()))?;
            set_dotted(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_sources(&text, overrides)
    }

    pub fn to_table(&self) -> toml::Table {
        match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("RunConfig always serializes to a table"),
        }
    }

    /// Copy with one dotted key replaced; re-validated.
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self, ConfigError> {
        let mut t = self.to_table();
        let is_int = get_dotted(&t, key).is_some_and(|v| v.is_integer());
        let v = if is_int && value.fract() == 0.0 {
            toml::Value::Integer(value as i64)
        } else {
            toml::Value::Float(value)
        };
        set_dotted(&mut t, key, v)?;
        Self::from_table(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_sources("model = \"flexwing\"\nbogus_key = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
        let err = RunConfig::from_sources("model = \"flexwing\"\n[rom]\nordr = 2\n", &[]).unwrap_err();
        assert!(err.to_string().contains("ordr"), "{err}");
    }

    #[test]
    fn overrides_beat_file() {
        let cfg = RunConfig::from_sources(
            "model = \"aerofoil3dof\"\n[rom]\norder = 3\n",
            &["rom.order=1".into(), "params.mu=50".into(), "output_dir=x".into()],
        )
        .unwrap();
        assert_eq!(cfg.rom.order, Some(1));
        assert_eq!(cfg.params["mu"].as_integer(), Some(50));
        assert_eq!(cfg.output_dir, PathBuf::from("x"));
    }

    #[test]
    fn sweep_grid_is_linspace() {
        let s = SweepConfig {
            parameter: "gust.t_g".into(),
            values: None,
            start: Some(0.5),
            stop: Some(20.0),
            count: Some(37),
        };
        let g = s.grid().unwrap();
        assert_eq!(g.len(), 37);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[36], 20.0);
    }

    #[test]
    fn with_value_round_trips() {
        let cfg = RunConfig::from_sources(
            "model = \"flexwing\"\n[gust]\nkind = \"one-minus-cosine\"\nwg_max = 1.0\nt_g = 1.0\n",
            &[],
        )
        .unwrap();
        let c2 = cfg.with_value("gust.t_g", 4.0).unwrap();
        assert_eq!(c2.gust.unwrap().t_g, 4.0);
    }
}
