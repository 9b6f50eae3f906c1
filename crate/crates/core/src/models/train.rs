//! Full-batch training and inference for every model kind.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::adjacency::{gcn_operator, mean_operator};
use super::network::{add_decay, loss_and_grad, sigmoid, Aggregation, Network, Operator};
use super::optim::Adam;
use super::pcgnn::Planner;
use super::sparse::SparseMatrix;
use super::spec::{ClassWeighting, ModelKind, ModelSpec, TrainConfig};
use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::graphdata::{MultiGraph, NodeTable};
use crate::metrics::auc;
use crate::rng::{stream_rng, Stream};
use crate::splits::{SplitAssignment, SplitTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    /// Epoch whose weights were kept (1-based; 0 for the majority baseline).
    pub best_epoch: usize,
    pub final_train_loss: f64,
    pub best_validation_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub standardizer: Standardizer,
    /// `None` for the majority baseline.
    pub network: Option<Network>,
    pub majority_label: u8,
    pub meta: TrainingMeta,
}

/// Nodes used for early stopping, scored on their own graph.
#[derive(Clone, Copy)]
pub struct ValidationSet<'a> {
    pub graph: &'a MultiGraph,
    pub nodes: &'a NodeTable,
    pub mask: &'a [bool],
}

/// Owned form of [`Operator`].
pub(crate) enum OwnedOperator {
    None,
    Symmetric(SparseMatrix),
    Mean { forward: SparseMatrix, transpose: SparseMatrix },
}

impl OwnedOperator {
    pub(crate) fn build(aggregation: Aggregation, graph: &MultiGraph) -> OwnedOperator {
        match aggregation {
            Aggregation::None => OwnedOperator::None,
            Aggregation::Propagate => OwnedOperator::Symmetric(gcn_operator(graph)),
            Aggregation::ConcatMean => {
                let forward = mean_operator(graph);
                let transpose = forward.transpose();
                OwnedOperator::Mean { forward, transpose }
            }
        }
    }

    pub(crate) fn borrow(&self) -> Operator<'_> {
        match self {
            OwnedOperator::None => Operator::None,
            OwnedOperator::Symmetric(p) => Operator::Symmetric(p),
            OwnedOperator::Mean { forward, transpose } => Operator::Mean { forward, transpose },
        }
    }
}

pub(crate) fn aggregation_of(kind: ModelKind) -> Aggregation {
    match kind {
        ModelKind::Majority | ModelKind::Logistic => Aggregation::None,
        ModelKind::Gcn | ModelKind::Pcgnn => Aggregation::Propagate,
        ModelKind::SageMean => Aggregation::ConcatMean,
    }
}

pub(crate) fn layer_dims(spec: &ModelSpec, input: usize) -> Vec<usize> {
    match (spec.kind, spec.layers) {
        (ModelKind::Logistic, _) | (_, 1) => vec![input, 1],
        _ => vec![input, spec.hidden_dim, 1],
    }
}

/// Per-node loss weights over the training rows.
fn class_weights(labels: &[u8], train: &[usize], weighting: ClassWeighting) -> Vec<(usize, f64)> {
    let count = |c: u8| train.iter().filter(|&&i| labels[i] == c).count() as f64;
    let counts = [count(0), count(1)];
    train
        .iter()
        .map(|&i| {
            let w = match weighting {
                ClassWeighting::None => 1.0,
                ClassWeighting::InverseFrequency => train.len() as f64 / (2.0 * counts[labels[i] as usize]),
            };
            (i, w)
        })
        .collect()
}

/// Trains on the `Train` part of `split`; the `Validation` part (if any)
/// drives early stopping on the same graph.
pub fn train_model(
    spec: &ModelSpec,
    graph: &MultiGraph,
    nodes: &NodeTable,
    split: &SplitAssignment,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    if split.len() != nodes.node_count() {
        return Err(Error::LengthMismatch {
            left: split.len(),
            right: nodes.node_count(),
        });
    }
    let train = split.mask(SplitTag::Train);
    let val = split.mask(SplitTag::Validation);
    let validation = val.iter().any(|&v| v).then_some(ValidationSet {
        graph,
        nodes,
        mask: &val,
    });
    train_with_validation(spec, graph, nodes, &train, validation, cfg)
}

/// Trains on the rows selected by `train_mask`, optionally early-stopping
/// on validation AUC.
pub fn train_with_validation(
    spec: &ModelSpec,
    graph: &MultiGraph,
    nodes: &NodeTable,
    train_mask: &[bool],
    validation: Option<ValidationSet>,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    spec.validate()?;
    cfg.validate()?;
    let n = nodes.node_count();
    if train_mask.len() != n {
        return Err(Error::LengthMismatch {
            left: train_mask.len(),
            right: n,
        });
    }
    if spec.kind.uses_graph() && graph.node_count() != n {
        return Err(Error::Shape(format!("graph has {} nodes, table has {n}", graph.node_count())));
    }
    let train: Vec<usize> = (0..n).filter(|&i| train_mask[i]).collect();
    if train.is_empty() {
        return Err(Error::DegenerateSplit("empty training part".into()));
    }
    let labels = &nodes.labels;
    let fraud = train.iter().filter(|&&i| labels[i] == 1).count();
    let standardizer = Standardizer::fit(&nodes.features, train_mask);

    if spec.kind == ModelKind::Majority {
        return Ok(TrainedModel {
            spec: spec.clone(),
            standardizer,
            network: None,
            majority_label: (fraud * 2 > train.len()) as u8,
            meta: TrainingMeta {
                epochs_run: 0,
                best_epoch: 0,
                final_train_loss: 0.0,
                best_validation_auc: None,
            },
        });
    }
    if fraud == 0 || fraud == train.len() {
        return Err(Error::DegenerateSplit("training part must contain both classes".into()));
    }

    let x = standardizer.apply(&nodes.features);
    let aggregation = aggregation_of(spec.kind);
    let mut rng = stream_rng(cfg.seed, Stream::Init, 0);
    let mut net = Network::init(aggregation, &layer_dims(spec, x.ncols()), &mut rng);
    let mut adam = Adam::new(&net, cfg.learning_rate);

    let planner = match spec.kind {
        ModelKind::Pcgnn => Some(Planner::new(graph, &x, labels, train_mask, &spec.pcgnn)?),
        _ => None,
    };
    let full_op = OwnedOperator::build(aggregation, graph);
    let targets = class_weights(labels, &train, cfg.class_weighting);

    let val_data = match validation {
        Some(v) => {
            let vx = standardizer.apply(&v.nodes.features);
            let rows: Vec<usize> = (0..v.mask.len()).filter(|&i| v.mask[i]).collect();
            let vlabels: Vec<u8> = rows.iter().map(|&i| v.nodes.labels[i]).collect();
            let both = vlabels.contains(&0) && vlabels.contains(&1);
            let op = if std::ptr::eq(v.graph, graph) {
                None
            } else {
                Some(OwnedOperator::build(aggregation, v.graph))
            };
            both.then_some((vx, rows, vlabels, op))
        }
        None => None,
    };
    let early_stopping = cfg.patience.filter(|_| val_data.is_some());

    let mut best: Option<(f64, usize, Network)> = None;
    let mut since_best = 0;
    let mut last_loss = f64::NAN;
    let mut epochs_run = 0;
    for epoch in 1..=cfg.epochs {
        epochs_run = epoch;
        let (sub_op, sub_targets);
        let (op, tgt) = match &planner {
            Some(p) => {
                let r = p.sample(cfg.seed, epoch as u64);
                sub_op = OwnedOperator::build(aggregation, &r.subgraph);
                sub_targets = r.picked.iter().map(|&i| (i, 1.0)).collect::<Vec<_>>();
                (sub_op.borrow(), sub_targets.as_slice())
            }
            None => (full_op.borrow(), targets.as_slice()),
        };
        let cache = net.forward(&x, &op);
        let (loss, dlogits) = loss_and_grad(&net, &cache.logits(), labels, tgt, cfg.weight_decay);
        if !loss.is_finite() {
            return Err(Error::NonConvergence { epoch });
        }
        last_loss = loss;
        let mut grads = net.backward(&cache, &dlogits, &op);
        add_decay(&net, &mut grads, cfg.weight_decay);
        adam.update(&mut net, &grads);

        if let (Some(patience), Some((vx, rows, vlabels, vop))) = (early_stopping, &val_data) {
            let op = vop.as_ref().unwrap_or(&full_op).borrow();
            let logits = net.forward(vx, &op).logits();
            let scores: Vec<f64> = rows.iter().map(|&i| logits[i]).collect();
            let score = auc(vlabels, &scores)?;
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, epoch, net.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }

    let (best_validation_auc, best_epoch, network) = match best {
        Some((a, e, n)) => (Some(a), e, n),
        None => (None, epochs_run, net),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        standardizer,
        network: Some(network),
        majority_label: 0,
        meta: TrainingMeta {
            epochs_run,
            best_epoch,
            final_train_loss: last_loss,
            best_validation_auc,
        },
    })
}

/// Fraud probabilities for every node. `graph` is only read by graph kinds.
pub fn predict_scores(model: &TrainedModel, graph: Option<&MultiGraph>, nodes: &NodeTable) -> Result<Vec<f64>> {
    if nodes.dim() != model.standardizer.dim() {
        return Err(Error::Shape(format!(
            "model expects {} features, table has {}",
            model.standardizer.dim(),
            nodes.dim()
        )));
    }
    let Some(net) = &model.network else {
        return Ok(vec![model.majority_label as f64; nodes.node_count()]);
    };
    let op = if model.spec.kind.uses_graph() {
        let g = graph.ok_or_else(|| Error::Shape(format!("{} needs a graph", model.spec.kind)))?;
        if g.node_count() != nodes.node_count() {
            return Err(Error::Shape(format!(
                "graph has {} nodes, table has {}",
                g.node_count(),
                nodes.node_count()
            )));
        }
        OwnedOperator::build(net.aggregation, g)
    } else {
        OwnedOperator::None
    };
    let x: Array2<f64> = model.standardizer.apply(&nodes.features);
    let logits: Array1<f64> = net.forward(&x, &op.borrow()).logits();
    Ok(logits.iter().map(|&z| sigmoid(z)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphdata::Edge;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn table(features: Array2<f64>, labels: Vec<u8>) -> NodeTable {
        let n = labels.len();
        NodeTable::new(features, labels, vec![true; n]).unwrap()
    }

    fn empty_graph(n: usize) -> MultiGraph {
        MultiGraph::from_edges(n, vec![Vec::new()]).unwrap()
    }

    #[test]
    fn majority_predicts_zero() {
        let labels: Vec<u8> = (0..1000).map(|i| (i % 20 == 0) as u8).collect();
        let nodes = table(Array2::zeros((1000, 2)), labels.clone());
        let split = SplitAssignment::new(vec![SplitTag::Train; 1000]);
        let g = empty_graph(1000);
        let m = train_model(&ModelSpec::new(ModelKind::Majority), &g, &nodes, &split, &TrainConfig::default()).unwrap();
        let scores = predict_scores(&m, None, &nodes).unwrap();
        assert!(scores.iter().all(|&s| s == 0.0));
        let correct = labels.iter().zip(&scores).filter(|(&y, &s)| (s >= 0.5) as u8 == y).count();
        assert_eq!(correct as f64 / 1000.0, 0.95);
    }

    fn separable(seed: u64) -> NodeTable {
        let mut rng = stream_rng(seed, Stream::Amounts, 0);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let labels: Vec<u8> = (0..100).map(|i| (i >= 50) as u8).collect();
        let features = Array2::from_shape_fn((100, 2), |(i, _)| {
            let centre = if labels[i] == 1 { 1.0 } else { -1.0 };
            centre + noise.sample(&mut rng)
        });
        table(features, labels)
    }

    #[test]
    fn logistic_separates_toy_set() {
        let nodes = separable(3);
        // linear oracle: x0 + x1 = 0 separates the clusters
        for i in 0..100 {
            let s = nodes.features[[i, 0]] + nodes.features[[i, 1]];
            assert_eq!((s > 0.0) as u8, nodes.labels[i]);
        }
        let split = SplitAssignment::new(vec![SplitTag::Train; 100]);
        let g = empty_graph(100);
        let m = train_model(&ModelSpec::new(ModelKind::Logistic), &g, &nodes, &split, &TrainConfig::default()).unwrap();
        assert!(m.meta.epochs_run <= 300);
        let scores = predict_scores(&m, None, &nodes).unwrap();
        let correct = (0..100).filter(|&i| (scores[i] >= 0.5) as u8 == nodes.labels[i]).count();
        assert_eq!(correct, 100);
    }

    #[test]
    fn zero_weights_give_half() {
        let nodes = separable(1);
        let split = SplitAssignment::new(vec![SplitTag::Train; 100]);
        let g = empty_graph(100);
        let mut m = train_model(&ModelSpec::new(ModelKind::Logistic), &g, &nodes, &split, &TrainConfig::default()).unwrap();
        m.network.as_mut().unwrap().params_mut().for_each(|p| *p = 0.0);
        assert!(predict_scores(&m, None, &nodes).unwrap().iter().all(|&s| s == 0.5));
    }

    /// Two disconnected 5-cliques; clique 0 legit, clique 1 fraud. Features
    /// are constant except one informative column set on the seed nodes.
    fn cliques() -> (MultiGraph, NodeTable, SplitAssignment) {
        let mut edges = Vec::new();
        for c in 0..2 {
            for a in 0..5 {
                for b in a + 1..5 {
                    edges.push(Edge {
                        src: 5 * c + a,
                        dst: 5 * c + b,
                        weight: 1,
                    });
                }
            }
        }
        let g = MultiGraph::from_edges(10, vec![edges]).unwrap();
        let labels: Vec<u8> = (0..10).map(|i| (i >= 5) as u8).collect();
        let mut features = Array2::from_elem((10, 2), 1.0);
        features[[0, 1]] = -1.0;
        features[[5, 1]] = 3.0;
        let mut tags = vec![SplitTag::Test; 10];
        tags[0] = SplitTag::Train;
        tags[5] = SplitTag::Train;
        (g, table(features, labels), SplitAssignment::new(tags))
    }

    /// Hand-written dense forward: sigmoid(P relu(P X W1 + b1) W2 + b2).
    fn oracle_forward(p: &Array2<f64>, x: &Array2<f64>, net: &Network) -> Vec<f64> {
        let (l1, l2) = (&net.layers[0], &net.layers[1]);
        let mut h = Array2::<f64>::zeros((x.nrows(), l1.weight.ncols()));
        for i in 0..x.nrows() {
            for k in 0..l1.weight.ncols() {
                let mut z = l1.bias[k];
                for j in 0..x.nrows() {
                    for f in 0..x.ncols() {
                        z += p[[i, j]] * x[[j, f]] * l1.weight[[f, k]];
                    }
                }
                h[[i, k]] = z.max(0.0);
            }
        }
        (0..x.nrows())
            .map(|i| {
                let mut z = l2.bias[0];
                for j in 0..x.nrows() {
                    for k in 0..h.ncols() {
                        z += p[[i, j]] * h[[j, k]] * l2.weight[[k, 0]];
                    }
                }
                sigmoid(z)
            })
            .collect()
    }

    #[test]
    fn gcn_spreads_clique_signal() {
        let (g, nodes, split) = cliques();
        let cfg = TrainConfig {
            weight_decay: 0.0,
            ..TrainConfig::default()
        };
        let m = train_model(&ModelSpec::new(ModelKind::Gcn), &g, &nodes, &split, &cfg).unwrap();
        let scores = predict_scores(&m, Some(&g), &nodes).unwrap();
        let p = crate::models::normalized_adjacency(&g, 0).unwrap();
        let x = m.standardizer.apply(&nodes.features);
        let expected = oracle_forward(&p, &x, m.network.as_ref().unwrap());
        for i in 0..10 {
            assert!((scores[i] - expected[i]).abs() < 1e-12);
            assert_eq!((scores[i] >= 0.5) as u8, nodes.labels[i], "node {i}: {}", scores[i]);
        }
    }

    #[test]
    fn inference_is_permutation_equivariant() {
        let (g, nodes, split) = cliques();
        for kind in [ModelKind::Logistic, ModelKind::Gcn, ModelKind::SageMean, ModelKind::Pcgnn] {
            let m = train_model(&ModelSpec::new(kind), &g, &nodes, &split, &TrainConfig::default()).unwrap();
            let base = predict_scores(&m, Some(&g), &nodes).unwrap();
            let perm: Vec<usize> = vec![7, 2, 9, 0, 4, 1, 8, 3, 6, 5];
            let edges: Vec<Edge> = g
                .edges(0)
                .unwrap()
                .iter()
                .map(|e| Edge {
                    src: perm[e.src],
                    dst: perm[e.dst],
                    weight: e.weight,
                })
                .collect();
            let pg = MultiGraph::from_edges(10, vec![edges]).unwrap();
            let mut pf = Array2::zeros((10, 2));
            let mut pl = vec![0; 10];
            for i in 0..10 {
                pf.row_mut(perm[i]).assign(&nodes.features.row(i));
                pl[perm[i]] = nodes.labels[i];
            }
            let moved = predict_scores(&m, Some(&pg), &table(pf, pl)).unwrap();
            for i in 0..10 {
                assert!((moved[perm[i]] - base[i]).abs() < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = stream_rng(4, Stream::Amounts, 1);
        let n = 40;
        let edges: Vec<Edge> = (0..120)
            .filter_map(|_| {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                (a != b).then_some(Edge { src: a, dst: b, weight: 1 })
            })
            .collect();
        let g = MultiGraph::from_edges(n, vec![edges]).unwrap();
        let labels: Vec<u8> = (0..n).map(|i| (i % 4 == 0) as u8).collect();
        let features = Array2::from_shape_fn((n, 3), |(i, j)| labels[i] as f64 + rng.random_range(-1.0..1.0) * j as f64);
        let nodes = table(features, labels);
        let tags = (0..n)
            .map(|i| match i % 5 {
                0..=2 => SplitTag::Train,
                3 => SplitTag::Validation,
                _ => SplitTag::Test,
            })
            .collect();
        let split = SplitAssignment::new(tags);
        for kind in ModelKind::ALL {
            let cfg = TrainConfig {
                epochs: 50,
                seed: 9,
                ..TrainConfig::default()
            };
            let a = train_model(&ModelSpec::new(kind), &g, &nodes, &split, &cfg).unwrap();
            let b = train_model(&ModelSpec::new(kind), &g, &nodes, &split, &cfg).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn one_class_training_rejected() {
        let nodes = table(Array2::zeros((4, 1)), vec![0, 0, 0, 1]);
        let split = SplitAssignment::new(vec![SplitTag::Train, SplitTag::Train, SplitTag::Test, SplitTag::Test]);
        let err = train_model(&ModelSpec::new(ModelKind::Logistic), &empty_graph(4), &nodes, &split, &TrainConfig::default());
        assert!(matches!(err, Err(Error::DegenerateSplit(_))));
    }

    #[test]
    fn feature_dimension_checked() {
        let nodes = separable(2);
        let split = SplitAssignment::new(vec![SplitTag::Train; 100]);
        let m = train_model(&ModelSpec::new(ModelKind::Logistic), &empty_graph(100), &nodes, &split, &TrainConfig::default()).unwrap();
        let other = table(Array2::zeros((3, 5)), vec![0, 1, 0]);
        assert!(matches!(predict_scores(&m, None, &other), Err(Error::Shape(_))));
    }
}
