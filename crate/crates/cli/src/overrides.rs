//! `--set dotted.key=value` edits applied to the serialized config.

use serde_json::Value;
use tvrls::experiments::ExperimentConfig;
use tvrls::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: Value,
}

impl Override {
    /// Parses `key=value`. The value is read as JSON when it parses as such
    /// and as a bare string otherwise, so `mode=pe` and `k_cut=null` both work.
    pub fn parse(text: &str) -> Result<Self> {
        let (key, raw) = text
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{text}' is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(Error::Config(format!("override '{text}' has an empty key")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        Ok(Override {
            key: key.to_string(),
            value,
        })
    }

    pub fn as_arg(&self) -> String {
        format!("{}={}", self.key, self.value)
    }
}

/// Applies the overrides in order. Every key must already exist in the
/// serialized config; the result is validated.
pub fn apply(cfg: &ExperimentConfig, overrides: &[Override]) -> Result<ExperimentConfig> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut tree = serde_json::to_value(cfg)?;
    for o in overrides {
        let mut node = &mut tree;
        for part in o.key.split('.') {
            node = node
                .as_object_mut()
                .and_then(|m| m.get_mut(part))
                .ok_or_else(|| Error::Config(format!("unknown config key '{}'", o.key)))?;
        }
        *node = o.value.clone();
    }
    let out: ExperimentConfig = serde_json::from_value(tree)
        .map_err(|e| Error::Config(format!("invalid override: {e}")))?;
    out.validate()?;
    Ok(out)
}
