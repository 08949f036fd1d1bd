//! Textual (TOML) configuration shared by the CLI and the demo service.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub pipeline: PipelineConfig,
    pub keyword_bundle: PathBuf,
    pub dvector_bundle: PathBuf,
    /// Where the enrolled speaker is persisted between runs.
    pub enrollment_file: Option<PathBuf>,
    pub port: u16,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            keyword_bundle: PathBuf::from("models/keyword-spotter.twb"),
            dvector_bundle: PathBuf::from("models/dvector-extractor.twb"),
            enrollment_file: None,
            port: 8765,
        }
    }
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.pipeline.stream.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative bundle and enrollment paths are resolved
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let Some(dir) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            };
            fix(&mut cfg.keyword_bundle);
            fix(&mut cfg.dvector_bundle);
            if let Some(e) = cfg.enrollment_file.as_mut() {
                fix(e);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}
