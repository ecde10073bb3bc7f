//! Run configuration: a TOML file whose values command-line flags override.
//!
//! Relative paths in the file resolve against the file's directory. Secrets
//! never live here; the bearer token is read from the environment.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use stance_core::effects::ModelId;
use stance_core::inference::{EndpointDescriptor, Variant};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointEntry {
    pub base_url: String,
    pub model: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub terms: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub models: Option<Vec<u8>>,
    pub catalog: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    /// Keyed by variant token (`english`, `spanish`, `english-spanish`,
    /// `multilanguage`) or `translate`.
    #[serde(default)]
    pub endpoints: BTreeMap<String, EndpointEntry>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let source = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&source).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.corpus,
            &mut config.terms,
            &mut config.checkpoint_dir,
            &mut config.out,
            &mut config.catalog,
            &mut config.fixtures,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        for key in config.endpoints.keys() {
            if key != "translate" && key.parse::<Variant>().is_err() {
                return Err(CliError::config(format!("config: unknown endpoint key `{key}`")));
            }
        }
        config.models()?;
        Ok(config)
    }

    pub fn models(&self) -> CliResult<Option<Vec<ModelId>>> {
        self.models
            .as_ref()
            .map(|ms| {
                ms.iter()
                    .map(|m| m.to_string().parse::<ModelId>().map_err(CliError::config))
                    .collect()
            })
            .transpose()
    }

    /// Endpoint for `key`, with flag overrides for the URL and model name.
    pub fn endpoint(&self, key: &str, url: Option<&str>, model: Option<&str>) -> CliResult<EndpointDescriptor> {
        let entry = self
            .endpoints
            .iter()
            .find(|(k, _)| *k == key || k.parse::<Variant>().ok().map(|v| v.token()) == Some(key))
            .map(|(_, e)| e);
        let base_url = url
            .map(str::to_string)
            .or_else(|| entry.map(|e| e.base_url.clone()))
            .ok_or_else(|| {
                CliError::config(format!(
                    "no endpoint for `{key}`: pass --endpoint or configure [endpoints.{key}]"
                ))
            })?;
        let model = model
            .map(str::to_string)
            .or_else(|| entry.map(|e| e.model.clone()))
            .ok_or_else(|| CliError::config(format!("no model id for `{key}`: pass --model-id")))?;
        Ok(EndpointDescriptor::new(base_url, model))
    }
}

/// `flag`, else the configured value; must name an existing file.
pub fn input_file(flag: Option<&PathBuf>, configured: Option<&PathBuf>, what: &str) -> CliResult<PathBuf> {
    let path = flag
        .or(configured)
        .cloned()
        .ok_or_else(|| CliError::config(format!("no {what} given: pass --{what} or set it in the config")))?;
    if !path.is_file() {
        return Err(CliError::config(format!("{what} {} does not exist", path.display())));
    }
    Ok(path)
}

/// Like [`input_file`] but optional.
pub fn optional_file(flag: Option<&PathBuf>, configured: Option<&PathBuf>, what: &str) -> CliResult<Option<PathBuf>> {
    match flag.or(configured) {
        None => Ok(None),
        Some(p) if p.is_file() => Ok(Some(p.clone())),
        Some(p) => Err(CliError::config(format!("{what} {} does not exist", p.display()))),
    }
}

/// Creates (if needed) and returns a writable directory.
pub fn output_dir(flag: Option<&PathBuf>, configured: Option<&PathBuf>, default: &str) -> CliResult<PathBuf> {
    let dir = flag.or(configured).cloned().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}
