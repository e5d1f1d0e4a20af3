//! The TOML configuration document.
//!
//! Stage settings sit at the top level (`[segmentation]`, `[oscillator]`,
//! `[fusion]`, `[analysis]`, ...), model and table locations under
//! `[paths]`, and recordings under `[[inputs]]`. Unknown keys are rejected.
//! Relative paths resolve against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vocalex_core::pipeline::PipelineSettings;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub ipa_table: Option<PathBuf>,
    pub word_model: Option<PathBuf>,
    /// Nearest-centroid frame detector replacing the energy baseline.
    pub frame_model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub video_id: String,
    pub audio: PathBuf,
    pub posteriors: Option<PathBuf>,
    pub locations: Option<PathBuf>,
    pub activities: Option<PathBuf>,
    pub dog_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub settings: PipelineSettings,
    pub paths: Paths,
    pub inputs: Vec<InputSpec>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn section<T: serde::de::DeserializeOwned + Default>(
    table: &mut toml::Table,
    key: &str,
) -> Result<T, CliError> {
    match table.remove(key) {
        None => Ok(T::default()),
        Some(v) => v
            .try_into()
            .map_err(|e| CliError::Usage(format!("config [{key}]: {e}"))),
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        let paths: Paths = section(&mut table, "paths")?;
        let inputs: Vec<InputSpec> = section(&mut table, "inputs")?;
        let settings: PipelineSettings = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Usage(format!("config: {e}")))?;
        settings
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Self {
            settings,
            paths,
            inputs,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.paths.ipa_table,
            &mut cfg.paths.word_model,
            &mut cfg.paths.frame_model,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
        for input in &mut cfg.inputs {
            resolve(base, &mut input.audio);
            for p in [
                &mut input.posteriors,
                &mut input.locations,
                &mut input.activities,
            ]
            .into_iter()
            .flatten()
            {
                resolve(base, p);
            }
        }
        Ok(cfg)
    }

    /// The effective configuration as embedded in report sidecars.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
