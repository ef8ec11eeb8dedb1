//! Scenario config-file loading.
//!
//! A scenario file is a list of `key = value` lines; `#` starts a comment
//! and blank lines are skipped. Keys follow the spellings in
//! [`pacot_core::params::CONFIG_KEYS`]. The loader remembers the line each
//! key was set on so validation reports and run manifests can point back
//! into the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pacot_core::params::{Scenario, ScenarioConfig};

/// A scenario config together with where its overrides came from.
#[derive(Debug, Clone)]
pub struct FileConfig {
    pub config: ScenarioConfig,
    /// Config key to the 1-based line that set it.
    pub lines: BTreeMap<String, usize>,
    pub path: Option<PathBuf>,
}

impl FileConfig {
    /// Human-readable source of a key: `path:line` for file overrides,
    /// `default` otherwise.
    pub fn source(&self, key: &str) -> String {
        match (self.lines.get(key), &self.path) {
            (Some(line), Some(path)) => format!("{}:{line}", path.display()),
            (Some(line), None) => format!("line {line}"),
            _ => "default".to_string(),
        }
    }
}

/// Loads the scenario config, starting from defaults and applying the file
/// at `path` when given.
pub fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let mut file = FileConfig {
        config: ScenarioConfig::default(),
        lines: BTreeMap::new(),
        path: path.map(Path::to_path_buf),
    };
    let Some(path) = path else {
        return Ok(file);
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            bail!("{}:{line}: expected key = value, got {content:?}", path.display());
        };
        let key = key.trim();
        let value = value.trim();
        if let Some(previous) = file.lines.get(key) {
            bail!(
                "{}:{line}: key {key:?} already set on line {previous}",
                path.display()
            );
        }
        file.config
            .apply_key(key, value)
            .map_err(|err| anyhow::Error::new(err))
            .with_context(|| format!("{}:{line}", path.display()))?;
        file.lines.insert(key.to_string(), line);
    }
    Ok(file)
}

/// Builds the validated scenario, applying the seed override first.
pub fn build_scenario(file: &FileConfig, seed: Option<u64>) -> Result<Scenario> {
    let mut config = file.config.clone();
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Scenario::from_config(&config).map_err(anyhow::Error::new)
}
