//! Resolution of run settings from defaults, presets, a `key=value` file
//! and command-line flags, in increasing order of precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ovmil::abmil::TrainConfig;
use ovmil::kv::{parse_kv, render_kv};
use ovmil::orchestrator::preset;

use crate::error::CliError;

/// Keys of a config file not yet consumed by a command.
#[derive(Debug, Default)]
pub struct ConfigFile {
    map: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(ConfigFile::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        parse_kv(text).map(|map| ConfigFile { map }).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    /// Removes and parses `key`.
    pub fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        self.take(key)
            .map(|v| v.parse().map_err(|_| CliError::Usage(format!("config key {key}: cannot parse `{v}`"))))
            .transpose()
    }

    /// Removes every key starting with `prefix`, returning the suffixes.
    pub fn take_prefixed(&mut self, prefix: &str) -> Vec<(String, String)> {
        let keys: Vec<String> = self.map.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
        keys.into_iter()
            .map(|k| {
                let v = self.map.remove(&k).unwrap_or_default();
                (k[prefix.len()..].to_string(), v)
            })
            .collect()
    }

    /// Applies training keys onto `config` and removes them.
    fn apply_train(&mut self, config: &mut TrainConfig) -> Result<(), CliError> {
        let unknown = config.apply_map(&self.map)?;
        self.map.retain(|k, _| unknown.contains(k));
        Ok(())
    }

    /// Fails on any key no part of the command consumed.
    pub fn finish(self) -> Result<(), CliError> {
        if self.map.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.map.keys().map(String::as_str).collect();
            Err(CliError::Usage(format!("unknown config keys: {}", keys.join(", "))))
        }
    }
}

/// Flag values for the training configuration.
#[derive(Debug, Default, Clone)]
pub struct TrainFlags {
    pub preset: Option<String>,
    pub sets: Vec<String>,
    pub max_epochs: Option<usize>,
    pub seed: Option<u64>,
}

/// Defaults, then the preset (flag, else file), then file keys, then flags.
pub fn resolve_train_config(
    file: &mut ConfigFile,
    flags: &TrainFlags,
) -> Result<(TrainConfig, Option<String>), CliError> {
    let preset_name = flags.preset.clone().or_else(|| file.take("preset"));
    let mut config = match &preset_name {
        Some(name) => preset(name).ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?.config(),
        None => TrainConfig::default(),
    };
    file.apply_train(&mut config)?;

    let mut overrides = BTreeMap::new();
    for s in &flags.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        overrides.insert(k.trim().to_string(), v.trim().to_string());
    }
    let unknown = config.apply_map(&overrides)?;
    if !unknown.is_empty() {
        return Err(CliError::Usage(format!("--set: unknown keys {}", unknown.join(", "))));
    }
    if let Some(e) = flags.max_epochs {
        config.max_epochs = e;
    }
    if let Some(s) = flags.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok((config, preset_name.map(|n| n.to_ascii_lowercase())))
}

/// Flag value if given, else the file's, else `default`.
pub fn pick<T: FromStr>(flag: Option<T>, file: &mut ConfigFile, key: &str, default: T) -> Result<T, CliError> {
    let from_file = file.take_parsed(key)?;
    Ok(flag.or(from_file).unwrap_or(default))
}

pub fn pick_path(flag: Option<PathBuf>, file: &mut ConfigFile, key: &str) -> Option<PathBuf> {
    let from_file = file.take(key).map(PathBuf::from);
    flag.or(from_file)
}

pub fn require_path(flag: Option<PathBuf>, file: &mut ConfigFile, key: &str) -> Result<PathBuf, CliError> {
    pick_path(flag, file, key).ok_or_else(|| CliError::Usage(format!("missing --{}", key.replace('_', "-"))))
}

/// Writes `pairs` as `key=value` text to `dir/name`.
pub fn write_echo(dir: &Path, name: &str, pairs: &[(String, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let text = render_kv(pairs.iter().map(|(k, v)| (k.as_str(), v.clone())));
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

pub fn owned(pairs: Vec<(&'static str, String)>) -> Vec<(String, String)> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}
