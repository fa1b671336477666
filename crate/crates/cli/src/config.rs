use std::path::Path;

use lifelong_core::data::SynthParams;
use lifelong_core::eval::SuiteSpec;
use lifelong_core::losses::LossConfig;
use lifelong_core::trainer::{ModelConfig, RunConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub base_fraction: f64,
    pub steps: usize,
    pub seed: u64,
    pub allow_overlap: bool,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            base_fraction: 0.5,
            steps: 5,
            seed: 0,
            allow_overlap: false,
        }
    }
}

/// Axes of an ablation grid. An empty axis keeps the single value from the
/// rest of the config; all three empty means there is nothing to run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSection {
    pub name: Option<String>,
    /// Loss masks such as `"msfd+gpkd"` or `"all"`.
    pub masks: Vec<String>,
    pub base_fractions: Vec<f64>,
    pub id_loss: Vec<bool>,
}

impl AblationSection {
    pub fn is_empty(&self) -> bool {
        self.masks.is_empty() && self.base_fractions.is_empty() && self.id_loss.is_empty()
    }
}

/// Everything a command needs: training data generator, plan, run settings,
/// evaluation suites and an optional ablation grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub data: SynthParams,
    pub plan: PlanSection,
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub train: TrainConfig,
    pub suites: Vec<SuiteSpec>,
    pub ablation: AblationSection,
}

impl CliConfig {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            model: self.model.clone(),
            loss: self.loss,
            train: self.train.clone(),
        }
    }

    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, overrides).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))
    }

    pub fn parse(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut table: Table = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let user = Value::Table(table);
        let config: CliConfig = user.clone().try_into().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        // Nested sections come from library types that ignore unknown keys.
        let canonical = Value::try_from(&config).map_err(|e| CliError::config(e.to_string()))?;
        unknown_keys(&user, &canonical, "")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.run_config().validate().map_err(CliError::config_from)?;
        for s in &self.suites {
            if self.suites.iter().filter(|o| o.name == s.name).count() > 1 {
                return Err(CliError::config(format!("suite name {:?} is used twice", s.name)));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::config(e.to_string()))
    }
}

/// `a.b.c=value`; the value is read as a TOML literal and falls back to a
/// bare string.
fn apply_override(table: &mut Table, spec: &str) -> CliResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override {spec:?} is not of the form key=value")))?;
    let key = key.trim();
    let parsed: Result<Table, _> = toml::from_str(&format!("v = {}", raw.trim()));
    let value = match parsed {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("override key {key:?} is malformed")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("override {key:?}: {part} is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn unknown_keys(user: &Value, canonical: &Value, prefix: &str) -> CliResult<()> {
    match (user, canonical) {
        (Value::Table(u), Value::Table(c)) => {
            for (k, v) in u {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match c.get(k) {
                    Some(cv) => unknown_keys(v, cv, &path)?,
                    None => return Err(CliError::config(format!("unknown config key {path:?}"))),
                }
            }
            Ok(())
        }
        (Value::Array(u), Value::Array(c)) => {
            for (i, (uv, cv)) in u.iter().zip(c).enumerate() {
                unknown_keys(uv, cv, &format!("{prefix}[{i}]"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}
