//! Study configuration: a TOML file plus environment overrides.
//!
//! Every key can be overridden with `QOTPLAN_<SECTION>__<KEY>`, nested tables
//! separated by further double underscores, for example
//! `QOTPLAN_GBT__N_TREES=200` or `QOTPLAN_PLANNER__THRESHOLDS__QPSK=9.5`.
//! Values are read as TOML literals and fall back to plain strings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::DatagenConfig;
use crate::error::{Error, Result};
use crate::gbt::Hyperparams;
use crate::planner::PlannerConfig;

pub const ENV_PREFIX: &str = "QOTPLAN_";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub datagen: DatagenConfig,
    pub split: SplitConfig,
    pub gbt: Hyperparams,
    pub planner: PlannerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub seed: u64,
    pub train_seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            seed: 7,
            train_seed: 11,
        }
    }
}

impl Config {
    /// Reads `path` (if given), then applies `QOTPLAN_*` variables from the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Config::from_sources(&text, std::env::vars())
    }

    pub fn from_sources<I>(toml_text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table =
            toml::from_str(toml_text).map_err(|e| Error::Config(e.to_string()))?;
        let defaults = toml::Value::try_from(Config::default())
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut vars: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        vars.sort();
        for (key, raw) in vars {
            let path: Vec<&str> = key[ENV_PREFIX.len()..].split("__").collect();
            set_path(&mut table, Some(&defaults), &path, parse_value(&raw))
                .map_err(|m| Error::Config(format!("{key}: {m}")))?;
        }
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.planner.thresholds.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The effective configuration as comment lines for output headers.
    pub fn echo_lines(&self) -> Vec<String> {
        self.to_toml_string()
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(String::from)
            .collect()
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Finds the canonical spelling of `key` among the defaults, ignoring case.
fn canonical(defaults: Option<&toml::Value>, key: &str) -> String {
    defaults
        .and_then(|d| d.as_table())
        .and_then(|t| t.keys().find(|k| k.eq_ignore_ascii_case(key)).cloned())
        .unwrap_or_else(|| key.to_ascii_lowercase())
}

fn set_path(
    table: &mut toml::Table,
    defaults: Option<&toml::Value>,
    path: &[&str],
    value: toml::Value,
) -> std::result::Result<(), String> {
    let (head, rest) = path.split_first().ok_or("empty key")?;
    if head.is_empty() {
        return Err("empty key segment".into());
    }
    let key = canonical(defaults, head);
    let sub_default = defaults.and_then(|d| d.get(&key));
    if rest.is_empty() {
        table.insert(key, value);
        return Ok(());
    }
    let entry = table
        .entry(key.clone())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => set_path(t, sub_default, rest, value),
        _ => Err(format!("{key} is not a table")),
    }
}
