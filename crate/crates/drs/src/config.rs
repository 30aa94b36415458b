//! Loading a [`ScenarioConfig`] from JSON with command-line overrides.
//!
//! Layers, later winning: built-in defaults, the config file, `--set`
//! overrides, then `--seed` / `--steps`. A run manifest is accepted in place
//! of a config file; its recorded config is used.

use std::fs;
use std::path::Path;

use drs_core::sim::ScenarioConfig;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Key that marks a JSON document as a run manifest.
pub const MANIFEST_MARKER: &str = "manifest_version";

/// Parses `key.path=value`. The value is read as JSON when it parses,
/// otherwise as a bare string.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::config("--set", format!("expected key=value, got `{s}`")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::config("--set", format!("malformed key `{key}`")));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((path, value))
}

/// Recursively merges `patch` into `base`. Keys missing from `base` are
/// errors, except below a `null` default (an unset optional).
fn merge(base: &mut Value, patch: Value, at: &str) -> Result<(), CliError> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let here = join(at, &k);
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &here)?,
                    None => return Err(CliError::config(here, "unknown key")),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

fn join(at: &str, k: &str) -> String {
    if at.is_empty() {
        k.to_owned()
    } else {
        format!("{at}.{k}")
    }
}

/// Whether `path` names a config field. Below an unset optional (a `null`
/// default) anything goes; deserialization judges those keys.
fn known_path(defaults: &Value, path: &[String]) -> Result<(), CliError> {
    let mut cur = defaults;
    let mut at = String::new();
    for key in path {
        at = join(&at, key);
        match cur {
            Value::Null => return Ok(()),
            Value::Object(map) => match map.get(key) {
                Some(next) => cur = next,
                None => return Err(CliError::config(at, "unknown key")),
            },
            _ => return Err(CliError::config(at, "is not a section")),
        }
    }
    Ok(())
}

fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let mut at = String::new();
    for key in path {
        at = join(&at, key);
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        let Value::Object(map) = cur else {
            return Err(CliError::config(at, "is not a section"));
        };
        cur = map.entry(key.clone()).or_insert(Value::Null);
    }
    *cur = value;
    Ok(())
}

/// Reads a config or manifest file into a JSON value holding just the config.
pub fn read_config_value(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(path.display().to_string(), format!("invalid JSON: {e}")))?;
    if value.get(MANIFEST_MARKER).is_some() {
        value = value
            .get_mut("config")
            .map(Value::take)
            .ok_or_else(|| CliError::config(path.display().to_string(), "manifest has no `config`"))?;
    }
    Ok(value)
}

/// Command-line layers applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub set: Vec<String>,
    pub seed: Option<u64>,
    pub steps: Option<u64>,
}

/// Builds and validates the effective config.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ScenarioConfig, CliError> {
    let defaults = serde_json::to_value(ScenarioConfig::default()).expect("defaults serialize");
    let mut value = defaults.clone();
    if let Some(p) = path {
        merge(&mut value, read_config_value(p)?, "")?;
    }
    for s in &overrides.set {
        let (key, v) = parse_override(s)?;
        known_path(&defaults, &key)?;
        set_path(&mut value, &key, v)?;
    }
    if let Some(seed) = overrides.seed {
        value["seed"] = seed.into();
    }
    if let Some(steps) = overrides.steps {
        value["steps"] = steps.into();
    }
    let cfg: ScenarioConfig =
        serde_json::from_value(value).map_err(|e| CliError::config("config", e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
