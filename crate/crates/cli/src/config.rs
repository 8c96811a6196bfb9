use std::path::{Path, PathBuf};

use hypersurf::catalog::{Catalog, Params};
use hypersurf::gauss::GaussMapKind;
use hypersurf::immersion::SharedImmersion;
use hypersurf::interval::CurvatureInterval;
use hypersurf::model::ModelKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything needed to reproduce one run. Written next to the artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_level: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<CurvatureInterval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub immersion: Option<ImmersionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauss: Option<GaussConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deform: Option<DeformConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

/// Either a shipped catalog entry or a constructor with parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructor: Option<String>,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<GaussMapKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeformKindConfig {
    NormalFlow,
    EuclideanRetraction,
    HalfSpaceRetraction,
    OverlapPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformConfig {
    pub kind: DeformKindConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Flow distance at the end of a normal-flow path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_end: Option<f64>,
    /// Fixed shrink factor of the overlap path; searched for when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tau_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula_tol: Option<f64>,
    /// Write an OBJ snapshot every this many uniform steps (n = 2 only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj_every: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write a Wavefront OBJ of the immersion (n = 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj: Option<bool>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn immersion_config(&self) -> Result<&ImmersionConfig, CliError> {
        self.immersion
            .as_ref()
            .ok_or_else(|| CliError::Config("missing field `immersion`".into()))
    }

    /// The configured immersion, the catalog entry it came from (if any) and
    /// the interval: the configured one, else the entry's.
    pub fn build(&self, catalog: &Catalog) -> Result<Built, CliError> {
        let ic = self.immersion_config()?;
        let (f, entry) = match (&ic.entry, &ic.constructor) {
            (Some(id), None) => {
                if self.model.is_some() || ic.params != Params::default() {
                    return Err(CliError::Config(
                        "`immersion.entry` cannot be combined with `immersion.params` or `model`".into(),
                    ));
                }
                let f = catalog
                    .make(id)
                    .map_err(|e| CliError::Config(format!("immersion.entry: {e}")))?;
                (f, catalog.get(id).ok().cloned())
            }
            (None, Some(name)) => {
                let mut params = ic.params.clone();
                if let Some(m) = &self.model {
                    params.model = Some(m.kind);
                    if m.kappa.is_some() {
                        params.kappa = m.kappa;
                    }
                }
                let f = hypersurf::catalog::make(name, &params)
                    .map_err(|e| CliError::Config(format!("immersion.constructor: {e}")))?;
                (f, None)
            }
            _ => {
                return Err(CliError::Config(
                    "`immersion` needs exactly one of `entry` and `constructor`".into(),
                ))
            }
        };
        let interval = self.interval.or(entry.as_ref().map(|e| e.interval));
        Ok(Built { f, entry, interval })
    }
}

pub struct Built {
    pub f: SharedImmersion,
    pub entry: Option<hypersurf::catalog::CatalogEntry>,
    pub interval: Option<CurvatureInterval>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_round_trips() {
        let text = r#"
seed = 3
mesh_level = 2
interval = "(-inf,-1)"

[model]
kind = "half-space"
kappa = 1.0

[immersion]
constructor = "bumpy_sphere"
params = { n = 2, mu = -2.0, eps = 0.05, modes = [3] }

[deform]
kind = "half-space-retraction"
mu = -2.0
steps = 9

[output]
dir = "out"
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.deform.as_ref().unwrap().kind, DeformKindConfig::HalfSpaceRetraction);
        let again = ExperimentConfig::parse(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
        let b = c.build(&Catalog::shipped()).unwrap();
        assert_eq!(b.f.model().kind(), ModelKind::HalfSpace);
    }

    #[test]
    fn unknown_fields_are_named() {
        let e = ExperimentConfig::parse("[deform]\nkind = \"normal-flow\"\nradius = 2.0\n").unwrap_err();
        assert!(e.to_string().contains("radius"), "{e}");
    }
}
