//! Built-in full-order models, selectable by name.

use anyhow::Result;
use nmor_core::models::aerofoil::{build_aerofoil_fom, AerofoilParams};
use nmor_core::models::flexwing::{build_flexwing_fom, WingParams};
use nmor_core::reduction::{BasisSelection, PairRanking};
use nmor_core::statespace::FomModel;
use serde::de::DeserializeOwned;

use crate::config::ConfigError;

/// Model-specific fallbacks for settings the config leaves open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelDefaults {
    pub selection: BasisSelection,
    pub dt: f64,
    /// ROM step when the config gives none; `None` means "same as `dt`".
    pub rom_dt: Option<f64>,
    pub t_end: f64,
    pub jacobian_step: f64,
    /// Convection speed for spectral gusts, in model units.
    pub gust_speed: f64,
}

pub struct BuiltModel {
    pub model: Box<dyn FomModel>,
    pub defaults: ModelDefaults,
}

pub trait ModelFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn build(&self, params: &toml::Table) -> Result<BuiltModel>;
}

fn parse_params<T: DeserializeOwned>(params: &toml::Table) -> Result<T, ConfigError> {
    toml::Value::Table(params.clone())
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Value {
            key: "params".into(),
            reason: e.to_string().trim().to_string(),
        })
}

struct Aerofoil;

impl ModelFactory for Aerofoil {
    fn name(&self) -> &'static str {
        "aerofoil3dof"
    }

    fn summary(&self) -> &'static str {
        "pitch-plunge-flap section with indicial aerodynamics (non-dimensional time)"
    }

    fn build(&self, params: &toml::Table) -> Result<BuiltModel> {
        let p: AerofoilParams = parse_params(params)?;
        Ok(BuiltModel {
            model: Box::new(build_aerofoil_fom(p)?),
            defaults: ModelDefaults {
                selection: BasisSelection::default(),
                dt: 0.05,
                rom_dt: None,
                t_end: 600.0,
                jacobian_step: 1e-6,
                gust_speed: 1.0,
            },
        })
    }
}

struct FlexWingFactory;

impl ModelFactory for FlexWingFactory {
    fn name(&self) -> &'static str {
        "flexwing"
    }

    fn summary(&self) -> &'static str {
        "clamped flexible half-wing, beam elements with strip aerodynamics"
    }

    fn build(&self, params: &toml::Table) -> Result<BuiltModel> {
        let p: WingParams = parse_params(params)?;
        let speed = p.u;
        Ok(BuiltModel {
            model: Box::new(build_flexwing_fom(p)?),
            defaults: ModelDefaults {
                selection: BasisSelection {
                    n_real: 4,
                    n_complex: 5,
                    origin_radius: 100.0,
                    ranking: PairRanking::Frequency,
                },
                dt: 1e-4,
                rom_dt: Some(1e-2),
                t_end: 12.0,
                jacobian_step: 1e-6,
                gust_speed: speed,
            },
        })
    }
}

pub struct Registry {
    factories: Vec<Box<dyn ModelFactory>>,
}

impl Default for Registry {
    fn default() -> Self {
        Self {
            factories: vec![Box::new(Aerofoil), Box::new(FlexWingFactory)],
        }
    }
}

impl Registry {
    pub fn names(&self) -> Vec<&'static str> {
        self.factories.iter().map(|f| f.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn ModelFactory, ConfigError> {
        self.factories
            .iter()
            .find(|f| f.name() == name)
            .map(|f| f.as_ref())
            .ok_or_else(|| ConfigError::Value {
                key: "model".into(),
                reason: format!("unknown model `{name}` (known: {})", self.names().join(", ")),
            })
    }

    pub fn build(&self, name: &str, params: &toml::Table) -> Result<BuiltModel> {
        self.get(name)?.build(params)
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn ModelFactory> {
        self.factories.iter().map(|f| f.as_ref())
    }
}
