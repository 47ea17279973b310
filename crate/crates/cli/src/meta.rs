//! The `meta.json` record written next to every set of artifacts.

use std::path::Path;

use serde_json::{json, Value};
use tvrls::experiments::ExperimentConfig;
use tvrls::{Error, Result};

pub const META_FILE: &str = "meta.json";

/// Columns whose values differ between otherwise identical runs.
pub const NONDETERMINISTIC_COLUMNS: [&str; 1] = ["step_ms"];

pub struct Meta<'a> {
    pub command: &'a str,
    /// Named configs; a single-run command has exactly one.
    pub runs: Vec<(String, ExperimentConfig)>,
    pub overrides: Vec<String>,
    pub wall_time_s: f64,
    pub artifacts: Vec<String>,
}

impl Meta<'_> {
    pub fn to_json(&self) -> Value {
        let runs: Vec<Value> = self
            .runs
            .iter()
            .map(|(name, cfg)| json!({ "name": name, "seed": cfg.seed, "config": cfg }))
            .collect();
        let mut v = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_s": self.wall_time_s,
            "overrides": self.overrides,
            "nondeterministic_columns": NONDETERMINISTIC_COLUMNS,
            "artifacts": self.artifacts,
            "runs": runs,
        });
        if let [(_, cfg)] = self.runs.as_slice() {
            v["seed"] = json!(cfg.seed);
            v["config"] = json!(cfg);
        }
        v
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(META_FILE);
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Reads a config file, accepting either a bare config or a `meta.json`
/// whose top-level `config` holds one.
pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: invalid JSON: {e}", path.display())))?;
    let value = match value {
        Value::Object(mut m) if m.contains_key("command") && m.contains_key("config") => {
            m.remove("config").unwrap_or_default()
        }
        Value::Object(m) if m.contains_key("command") => {
            return Err(Error::Config(format!(
                "{}: metadata holds several runs; pass one of them as a config",
                path.display()
            )))
        }
        other => other,
    };
    let cfg: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.root())))?;
    Ok(cfg)
}
