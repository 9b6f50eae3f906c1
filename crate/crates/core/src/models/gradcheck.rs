//! Central finite-difference check of the hand-written gradients.

use ndarray::Array2;
use rand::Rng;

use super::network::{add_decay, flatten, loss_and_grad, Network, Operator};
use super::pcgnn::Planner;
use super::spec::{ModelKind, ModelSpec};
use super::standardize::Standardizer;
use super::train::{aggregation_of, layer_dims, OwnedOperator};
use crate::error::{Error, Result};
use crate::graphdata::{MultiGraph, NodeTable};
use crate::rng::{stream_rng, Stream};

pub const FD_STEP: f64 = 1e-5;
/// Halvings of the step tried when a probe flips a ReLU unit.
const MAX_HALVINGS: u32 = 30;

/// A random parameter point for `spec` on `input_dim` features: Glorot
/// weights and uniform biases in [-0.5, 0.5].
pub fn random_point(spec: &ModelSpec, input_dim: usize, seed: u64) -> Network {
    let mut rng = stream_rng(seed, Stream::Init, 1);
    let mut net = Network::init(aggregation_of(spec.kind), &layer_dims(spec, input_dim), &mut rng);
    for layer in &mut net.layers {
        layer.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    net
}

/// Loss over every node (pcgnn: over the picked multiset on its rebalanced
/// subgraph) with L2 penalty `weight_decay`. Returns the maximum, over all
/// weight and bias coordinates, of `|a - n| / max(1e-8, |a| + |n|)`.
///
/// A probe that switches any ReLU unit on or off is retried with half the
/// step, so the difference never straddles a kink.
pub fn gradient_check(
    spec: &ModelSpec,
    graph: &MultiGraph,
    nodes: &NodeTable,
    point: &Network,
    weight_decay: f64,
) -> Result<f64> {
    if spec.kind == ModelKind::Majority {
        return Err(Error::config("model", "majority has no parameters"));
    }
    let n = nodes.node_count();
    if point.input_dim() != nodes.dim() || point.aggregation != aggregation_of(spec.kind) {
        return Err(Error::Shape("parameter point does not match the model".into()));
    }
    let all = vec![true; n];
    let x: Array2<f64> = Standardizer::fit(&nodes.features, &all).apply(&nodes.features);
    let (op, targets) = match spec.kind {
        ModelKind::Pcgnn => {
            let planner = Planner::new(graph, &x, &nodes.labels, &all, &spec.pcgnn)?;
            let r = planner.sample(0, 0);
            let targets = r.picked.iter().map(|&i| (i, 1.0)).collect();
            (OwnedOperator::build(point.aggregation, &r.subgraph), targets)
        }
        _ => (
            OwnedOperator::build(point.aggregation, graph),
            (0..n).map(|i| (i, 1.0)).collect::<Vec<_>>(),
        ),
    };
    let op: Operator = op.borrow();
    let probe_loss = |net: &Network| {
        let cache = net.forward(&x, &op);
        let loss = loss_and_grad(net, &cache.logits(), &nodes.labels, &targets, weight_decay).0;
        (loss, cache.active_pattern())
    };

    let cache = point.forward(&x, &op);
    let pattern = cache.active_pattern();
    let (_, dlogits) = loss_and_grad(point, &cache.logits(), &nodes.labels, &targets, weight_decay);
    let mut grads = point.backward(&cache, &dlogits, &op);
    add_decay(point, &mut grads, weight_decay);
    let analytic = flatten(&grads);

    let mut probe = point.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let original = *probe.params_mut().nth(k).expect("same parameter count");
        let mut step = FD_STEP;
        let mut numeric = 0.0;
        for _ in 0..=MAX_HALVINGS {
            *probe.params_mut().nth(k).unwrap() = original + step;
            let (up, up_pattern) = probe_loss(&probe);
            *probe.params_mut().nth(k).unwrap() = original - step;
            let (down, down_pattern) = probe_loss(&probe);
            numeric = (up - down) / (2.0 * step);
            if up_pattern == pattern && down_pattern == pattern {
                break;
            }
            step /= 2.0;
        }
        *probe.params_mut().nth(k).unwrap() = original;
        worst = worst.max((a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8));
    }
    Ok(worst)
}

/// Analytic gradients at `point` with loss over all nodes, in parameter order.
pub fn analytic_gradient(spec: &ModelSpec, graph: &MultiGraph, nodes: &NodeTable, point: &Network, weight_decay: f64) -> Vec<f64> {
    let all = vec![true; nodes.node_count()];
    let x = Standardizer::fit(&nodes.features, &all).apply(&nodes.features);
    let op = OwnedOperator::build(aggregation_of(spec.kind), graph);
    let op = op.borrow();
    let targets: Vec<(usize, f64)> = (0..nodes.node_count()).map(|i| (i, 1.0)).collect();
    let cache = point.forward(&x, &op);
    let (_, dlogits) = loss_and_grad(point, &cache.logits(), &nodes.labels, &targets, weight_decay);
    let mut grads = point.backward(&cache, &dlogits, &op);
    add_decay(point, &mut grads, weight_decay);
    flatten(&grads)
}
