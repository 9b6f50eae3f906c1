use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Majority,
    Logistic,
    Gcn,
    SageMean,
    Pcgnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Majority,
        ModelKind::Logistic,
        ModelKind::Gcn,
        ModelKind::SageMean,
        ModelKind::Pcgnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Majority => "majority",
            ModelKind::Logistic => "logistic",
            ModelKind::Gcn => "gcn",
            ModelKind::SageMean => "sage_mean",
            ModelKind::Pcgnn => "pcgnn",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::config("model", format!("unknown model kind `{name}`")))
    }

    pub fn uses_graph(self) -> bool {
        matches!(self, ModelKind::Gcn | ModelKind::SageMean | ModelKind::Pcgnn)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcgnnParams {
    /// Nodes drawn per epoch; `None` draws as many as there are training nodes.
    pub pick_size: Option<usize>,
    pub oversample_k: usize,
    /// Fraction of a majority node's neighbours kept (nearest first).
    pub undersample_keep: f64,
    pub distance: Distance,
}

impl Default for PcgnnParams {
    fn default() -> Self {
        PcgnnParams {
            pick_size: None,
            oversample_k: 5,
            undersample_keep: 0.5,
            distance: Distance::Cosine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default)]
    pub pcgnn: PcgnnParams,
}

fn default_hidden() -> usize {
    16
}

fn default_layers() -> usize {
    2
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            hidden_dim: default_hidden(),
            layers: default_layers(),
            pcgnn: PcgnnParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim < 1 {
            return Err(Error::config("hidden_dim", "must be at least 1"));
        }
        if !(1..=2).contains(&self.layers) {
            return Err(Error::config("layers", "must be 1 or 2"));
        }
        let rho = self.pcgnn.undersample_keep;
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::config("pcgnn.undersample_keep", "must lie in (0, 1]"));
        }
        if self.pcgnn.pick_size == Some(0) {
            return Err(Error::config("pcgnn.pick_size", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    #[default]
    None,
    InverseFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub class_weighting: ClassWeighting,
    /// Epochs without validation-AUC improvement before stopping; `None`
    /// disables early stopping.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            class_weighting: ClassWeighting::None,
            patience: Some(30),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::config("train.epochs", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("train.learning_rate", "must be positive"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::config("train.weight_decay", "must be non-negative"));
        }
        Ok(())
    }
}
