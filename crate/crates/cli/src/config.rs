//! Versioned JSON configuration layered over a built-in preset.
//!
//! A config file is a partial document: objects are merged key by key onto
//! the preset, anything else replaces the preset value. Unknown keys are
//! rejected with their full path and line.

use std::path::Path;

use ccroute_core::sim::{SweepAxis, TrafficSweepConfig, TrialConfig};
use ccroute_core::traffic::{CrossRoadPolicy, RoadCellIncidence};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 11 x 21 grid, 9 stations, 1,000 trials.
    Desk,
    /// 11 x 51 grid, 21 stations, γ = 55 Mbps, 10,000 trials.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceConfig {
    /// Channels shared by all cells.
    pub b0: f64,
    pub cross_road: CrossRoadPolicy,
    /// Roads and cells to balance; the two-cell example when absent.
    pub incidence: Option<RoadCellIncidence>,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            b0: 10.0,
            cross_road: CrossRoadPolicy::default(),
            incidence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    pub scenario: TrialConfig,
    pub traffic: TrafficSweepConfig,
    pub balance: BalanceConfig,
    pub sweep: Option<SweepConfig>,
}

impl Config {
    pub fn preset(preset: Preset) -> Self {
        Config {
            version: VERSION,
            scenario: match preset {
                Preset::Desk => TrialConfig::desk(),
                Preset::Paper => TrialConfig::full_scale(),
            },
            traffic: TrafficSweepConfig::default(),
            balance: BalanceConfig::default(),
            sweep: None,
        }
    }

    pub fn load(path: &Path, preset: Preset) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, preset).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, preset: Preset) -> Result<Self, CliError> {
        let user: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let Value::Object(obj) = &user else {
            return Err(CliError::Config("top level must be a JSON object".into()));
        };
        match obj.get("version") {
            Some(Value::Number(n)) if n.as_u64() == Some(VERSION as u64) => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "{}version: unsupported value {v}, expected {VERSION}",
                    line_prefix(text, "version")
                )))
            }
            None => return Err(CliError::Config(format!("missing key `version` (expected {VERSION})"))),
        }
        let mut merged = serde_json::to_value(Config::preset(preset)).expect("preset serialises");
        merge(&mut merged, user);
        let cfg: Config = serde_path_to_error::deserialize(merged).map_err(|e| {
            let path = e.path().to_string();
            let key = path.rsplit('.').next().unwrap_or("").trim_end_matches(|c: char| c == ']' || c.is_ascii_digit());
            let key = key.trim_end_matches('[');
            let inner = e.into_inner().to_string();
            // For unknown keys the offending name is in the message, not the path.
            let anchor = unknown_key(&inner).unwrap_or(key);
            format!("{}{path}: {inner}", line_prefix(text, anchor))
        })
        .map_err(CliError::Config)?;
        Ok(cfg)
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn unknown_key(msg: &str) -> Option<&str> {
    let rest = msg.strip_prefix("unknown field `")?;
    rest.split('`').next()
}

/// `"line N: "` for the first occurrence of `"key"` in the source text.
fn line_prefix(text: &str, key: &str) -> String {
    if key.is_empty() {
        return String::new();
    }
    let needle = format!("\"{key}\"");
    match text.find(&needle) {
        Some(at) => format!("line {}: ", text[..at].matches('\n').count() + 1),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> String {
        match Config::parse(text, Preset::Desk) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn overrides_merge_onto_preset() {
        let cfg = Config::parse(r#"{"version": 1, "scenario": {"grid": {"streets": 5}, "gamma": 30}}"#, Preset::Paper)
            .unwrap();
        assert_eq!(cfg.scenario.grid.streets, 5);
        assert_eq!(cfg.scenario.grid.avenues, 11);
        assert_eq!(cfg.scenario.gamma, 30.0);
        assert_eq!(cfg.scenario.stations.count, 21);
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let m = err("{\n  \"version\": 1,\n  \"scenario\": {\n    \"grid\": {\"avenuez\": 3}\n  }\n}");
        assert!(m.contains("avenuez"), "{m}");
        assert!(m.contains("scenario.grid"), "{m}");
        assert!(m.starts_with("line 4:"), "{m}");
    }

    #[test]
    fn wrong_type_is_named() {
        let m = err("{\"version\": 1,\n\"scenario\": {\"trials\": \"many\"}}");
        assert!(m.contains("scenario.trials"), "{m}");
        assert!(m.starts_with("line 2:"), "{m}");
    }

    #[test]
    fn version_is_required() {
        assert!(err("{}").contains("version"));
        assert!(err(r#"{"version": 2}"#).contains("unsupported"));
        assert!(err("{\"version\": 1,").starts_with("line 1"));
    }
}
