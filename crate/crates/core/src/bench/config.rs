use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphdata::WindowSpec;
use crate::models::{ModelKind, ModelSpec, TrainConfig};
use crate::simcore::SimConfig;
use crate::splits::check_ordered;

pub const DEFAULT_SEED_COUNT: usize = 10;
pub const DEFAULT_RATIOS: [f64; 3] = [0.6, 0.2, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Stratified,
    Temporal,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Stratified => "stratified",
            Protocol::Temporal => "temporal",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "stratified" => Ok(Protocol::Stratified),
            "temporal" => Ok(Protocol::Temporal),
            other => Err(Error::config("protocol", format!("unknown protocol `{other}`"))),
        }
    }
}

/// A simulator config given inline or as a path relative to the
/// experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SimSource {
    Path(PathBuf),
    Inline(Box<SimConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Simulate afresh for every run seed (the seed replaces the file's).
    Generate(SimSource),
    /// Read a dataset directory once and reuse it for every run.
    Load(PathBuf),
}

/// A model given by kind name or as a full spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelEntry {
    Name(String),
    Spec(ModelSpec),
}

impl ModelEntry {
    pub fn resolve(&self) -> Result<ModelSpec> {
        let spec = match self {
            ModelEntry::Name(name) => ModelSpec::new(ModelKind::parse(name)?),
            ModelEntry::Spec(spec) => spec.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedList {
    Range {
        base: u64,
        #[serde(default = "default_seed_count")]
        count: usize,
    },
    List(Vec<u64>),
}

fn default_seed_count() -> usize {
    DEFAULT_SEED_COUNT
}

impl Default for SeedList {
    fn default() -> Self {
        SeedList::Range {
            base: 0,
            count: DEFAULT_SEED_COUNT,
        }
    }
}

impl SeedList {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedList::Range { base, count } => (0..*count as u64).map(|i| base + i).collect(),
            SeedList::List(list) => list.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowPlan {
    pub train: WindowSpec,
    pub tests: [WindowSpec; 2],
}

impl Default for WindowPlan {
    fn default() -> Self {
        WindowPlan {
            train: WindowSpec {
                first_month: 1,
                last_month: 4,
            },
            tests: [
                WindowSpec {
                    first_month: 5,
                    last_month: 8,
                },
                WindowSpec {
                    first_month: 9,
                    last_month: 12,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset label used in report rows.
    pub name: String,
    pub dataset: DatasetSource,
    pub protocol: Protocol,
    pub models: Vec<ModelEntry>,
    /// The run seed overrides `train.seed`.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub seeds: SeedList,
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
    #[serde(default)]
    pub windows: WindowPlan,
    /// Overridden by the CLI `--out` flag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_ratios() -> [f64; 3] {
    DEFAULT_RATIOS
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "experiment config".into(),
            source,
        })
    }

    /// Reads a config file; relative dataset paths are resolved against the
    /// file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        match &mut config.dataset {
            DatasetSource::Generate(SimSource::Path(p)) | DatasetSource::Load(p) if p.is_relative() => {
                *p = base.join(&*p);
            }
            _ => {}
        }
        Ok(config)
    }

    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        self.models.iter().map(ModelEntry::resolve).collect()
    }

    pub fn sim_config(&self) -> Result<Option<SimConfig>> {
        match &self.dataset {
            DatasetSource::Generate(SimSource::Inline(c)) => Ok(Some((**c).clone())),
            DatasetSource::Generate(SimSource::Path(p)) => SimConfig::from_path(p).map(Some),
            DatasetSource::Load(_) => Ok(None),
        }
    }

    /// Fails fast on everything checkable without touching data.
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::config("models", "at least one model required"));
        }
        let specs = self.model_specs()?;
        let kinds: BTreeSet<_> = specs.iter().map(|s| s.kind).collect();
        if kinds.len() != specs.len() {
            return Err(Error::config("models", "each model kind may appear once"));
        }
        self.train.validate()?;
        let seeds = self.seeds.seeds();
        if seeds.len() < 2 {
            return Err(Error::config("seeds", "at least 2 seeds needed for mean and spread"));
        }
        if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        let sum: f64 = self.ratios.iter().sum();
        if self.ratios.iter().any(|&r| !(r > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("ratios", "must be positive and sum to 1"));
        }
        if let Some(sim) = self.sim_config()? {
            sim.validate()?;
        }
        if self.protocol == Protocol::Temporal {
            let w = &self.windows;
            check_ordered(&[w.train, w.tests[0], w.tests[1]])?;
            if self.train.patience.is_some() && w.train.first_month == w.train.last_month {
                return Err(Error::config(
                    "windows.train",
                    "early stopping reserves the last training month; the window needs at least 2 months",
                ));
            }
            if let Some(sim) = self.sim_config()? {
                for t in [w.train, w.tests[0], w.tests[1]] {
                    t.validate(Some(sim.months))
                        .map_err(|e| Error::config("windows", e.to_string()))?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "toy",
        "dataset": {"generate": {"legit_accounts": 20, "illicit_accounts": 10, "legit_transactions": 100,
            "illicit_transactions": 50, "seed": 0, "amount": {"legit_mean": 100.0, "illicit_mean": 200.0}}},
        "protocol": "stratified",
        "models": ["logistic", {"kind": "gcn", "hidden_dim": 8}]
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.seeds.seeds(), (0..10).collect::<Vec<u64>>());
        assert_eq!(c.ratios, [0.6, 0.2, 0.2]);
        assert_eq!(c.windows, WindowPlan::default());
        let specs = c.model_specs().unwrap();
        assert_eq!(specs[1].hidden_dim, 8);
        assert_eq!(specs[1].layers, 2);
    }

    #[test]
    fn unknown_model_is_config_error() {
        let c = ExperimentConfig::from_json(&MINIMAL.replace("\"logistic\"", "\"xgboost\"")).unwrap();
        let err = c.validate().unwrap_err();
        assert!(err.is_config_error(), "{err}");
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let text = MINIMAL.replace("\"protocol\"", "\"seeds\": [3, 3], \"protocol\"");
        let err = ExperimentConfig::from_json(&text).unwrap().validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "seeds"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ExperimentConfig::from_json(&MINIMAL.replace("\"protocol\"", "\"potocol\": 1, \"protocol\"")).is_err());
    }
}
