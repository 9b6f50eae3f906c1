//! `model.json`: spec, standardisation statistics and row-major weights.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::network::{Aggregation, Dense, Network};
use super::spec::ModelSpec;
use super::standardize::Standardizer;
use super::train::{aggregation_of, layer_dims, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};

pub const MODEL_FILE: &str = "model.json";

/// 17 significant digits: enough to round-trip any `f64`.
fn number(v: f64) -> Box<RawValue> {
    let text = if v.is_finite() { format!("{v:.16e}") } else { "null".to_string() };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

fn numbers(values: impl IntoIterator<Item = f64>) -> Vec<Box<RawValue>> {
    values.into_iter().map(number).collect()
}

#[derive(Serialize)]
struct LayerOut {
    rows: usize,
    cols: usize,
    weight: Vec<Box<RawValue>>,
    bias: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct StandardizerOut {
    mean: Vec<Box<RawValue>>,
    std: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct ModelOut<'a> {
    kind: &'static str,
    spec: &'a ModelSpec,
    aggregation: Option<Aggregation>,
    standardization: StandardizerOut,
    majority_label: u8,
    meta: &'a TrainingMeta,
    layers: Vec<LayerOut>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerIn {
    rows: usize,
    cols: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelIn {
    #[allow(dead_code)]
    kind: String,
    spec: ModelSpec,
    aggregation: Option<Aggregation>,
    standardization: Standardizer,
    majority_label: u8,
    meta: TrainingMeta,
    layers: Vec<LayerIn>,
}

pub fn model_to_json(model: &TrainedModel) -> String {
    let layers = model
        .network
        .iter()
        .flat_map(|n| &n.layers)
        .map(|d| LayerOut {
            rows: d.weight.nrows(),
            cols: d.weight.ncols(),
            weight: numbers(d.weight.iter().copied()),
            bias: numbers(d.bias.iter().copied()),
        })
        .collect();
    let out = ModelOut {
        kind: model.spec.kind.name(),
        spec: &model.spec,
        aggregation: model.network.as_ref().map(|n| n.aggregation),
        standardization: StandardizerOut {
            mean: numbers(model.standardizer.mean.iter().copied()),
            std: numbers(model.standardizer.std.iter().copied()),
        },
        majority_label: model.majority_label,
        meta: &model.meta,
        layers,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("model serialises");
    text.push('\n');
    text
}

pub fn model_from_json(text: &str, context: &str) -> Result<TrainedModel> {
    let m: ModelIn = serde_json::from_str(text).map_err(|source| Error::Json {
        context: context.to_string(),
        source,
    })?;
    m.spec.validate()?;
    let bad = |reason: String| Error::Shape(format!("{context}: {reason}"));
    let d = m.standardization.mean.len();
    if m.standardization.std.len() != d || m.standardization.std.iter().any(|&s| !(s >= 0.0)) {
        return Err(bad("standardisation statistics inconsistent".into()));
    }
    let network = match m.aggregation {
        None if m.layers.is_empty() => None,
        None => return Err(bad("layers present without aggregation".into())),
        Some(aggregation) => {
            if aggregation != aggregation_of(m.spec.kind) {
                return Err(bad("aggregation does not match model kind".into()));
            }
            let widen = if aggregation == Aggregation::ConcatMean { 2 } else { 1 };
            let dims = layer_dims(&m.spec, d);
            if m.layers.len() + 1 != dims.len() {
                return Err(bad(format!("expected {} layers, found {}", dims.len() - 1, m.layers.len())));
            }
            let mut layers = Vec::with_capacity(m.layers.len());
            for (l, layer) in m.layers.into_iter().enumerate() {
                if layer.rows != widen * dims[l] || layer.cols != dims[l + 1] || layer.bias.len() != layer.cols {
                    return Err(bad(format!("layer {l} has the wrong shape")));
                }
                let weight = Array2::from_shape_vec((layer.rows, layer.cols), layer.weight)
                    .map_err(|e| bad(format!("layer {l}: {e}")))?;
                layers.push(Dense {
                    weight,
                    bias: Array1::from(layer.bias),
                });
            }
            Some(Network { aggregation, layers })
        }
    };
    Ok(TrainedModel {
        spec: m.spec,
        standardizer: m.standardization,
        network,
        majority_label: m.majority_label,
        meta: m.meta,
    })
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    std::fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gradcheck::random_point;
    use crate::models::{ModelKind, Standardizer};
    use proptest::prelude::*;

    fn model(kind: ModelKind, seed: u64) -> TrainedModel {
        let spec = ModelSpec::new(kind);
        TrainedModel {
            network: (kind != ModelKind::Majority).then(|| random_point(&spec, 3, seed)),
            spec,
            standardizer: Standardizer {
                mean: vec![0.1, -2.5e-7, 3.0],
                std: vec![1.0 / 3.0, 0.0, 1e300],
            },
            majority_label: 0,
            meta: TrainingMeta {
                epochs_run: 12,
                best_epoch: 7,
                final_train_loss: std::f64::consts::LN_2,
                best_validation_auc: Some(0.75),
            },
        }
    }

    #[test]
    fn round_trips_every_kind() {
        for kind in ModelKind::ALL {
            let m = model(kind, 4);
            let text = model_to_json(&m);
            assert_eq!(model_from_json(&text, "t").unwrap(), m, "{kind}");
            assert_eq!(model_to_json(&model_from_json(&text, "t").unwrap()), text);
        }
    }

    #[test]
    fn rejects_wrong_shape() {
        let text = model_to_json(&model(ModelKind::Gcn, 1)).replacen("\"rows\": 3", "\"rows\": 4", 1);
        assert!(model_from_json(&text, "t").is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let parsed: f64 = serde_json::from_str(number(v).get()).unwrap();
            prop_assert_eq!(parsed.to_bits(), v.to_bits());
        }
    }
}
