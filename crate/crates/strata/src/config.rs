//! Unified TOML run configuration.
//!
//! A single `RunConfig` file carries the settings for every pipeline stage;
//! each section is optional and falls back to the stage defaults. Unknown
//! keys are rejected so typos surface immediately.

use crate::fusion::FusionConfig;
use crate::places::PlacesConfig;
use crate::planner::TerrainPolicy;
use crate::query::QueryConfig;
use crate::regions::RegionConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub fusion: FusionConfig,
    pub places: PlacesConfig,
    pub regions: RegionConfig,
    pub query: QueryConfig,
    pub terrain_policy: TerrainPolicy,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        self.fusion.validate().map_err(|e| invalid(e.to_string()))?;
        self.places.validate().map_err(|e| invalid(e.to_string()))?;
        self.regions.validate().map_err(|e| invalid(e.to_string()))?;
        self.query.validate().map_err(|e| invalid(e.to_string()))?;
        self.terrain_policy
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }
}
