//! Dense layers over a graph aggregation, with hand-written backprop.

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sparse::SparseMatrix;

/// How a layer mixes node rows before its linear map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// No mixing (feature-only model).
    None,
    /// `P · H` with a symmetric propagation matrix.
    Propagate,
    /// `[H | M · H]` with a row-normalised neighbour-mean matrix.
    ConcatMean,
}

/// Graph operators a forward pass needs.
pub enum Operator<'a> {
    None,
    Symmetric(&'a SparseMatrix),
    Mean {
        forward: &'a SparseMatrix,
        transpose: &'a SparseMatrix,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros_like(&self) -> Dense {
        Dense {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub aggregation: Aggregation,
    pub layers: Vec<Dense>,
}

pub struct ForwardCache {
    /// Aggregated input of each layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of each layer; the last one holds the logits.
    pre: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn logits(&self) -> Array1<f64> {
        self.pre.last().expect("at least one layer").column(0).to_owned()
    }

    /// Which hidden ReLU units are active.
    pub(crate) fn active_pattern(&self) -> Vec<bool> {
        let hidden = &self.pre[..self.pre.len() - 1];
        hidden.iter().flat_map(|z| z.iter().map(|&v| v > 0.0)).collect()
    }
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-a..a))
}

impl Network {
    /// Layer widths `dims[0] -> dims[1] -> ... -> 1` with Glorot-uniform
    /// weights and zero biases.
    pub fn init(aggregation: Aggregation, dims: &[usize], rng: &mut ChaCha8Rng) -> Network {
        let widen = if aggregation == Aggregation::ConcatMean { 2 } else { 1 };
        let layers = dims
            .windows(2)
            .map(|w| Dense {
                weight: glorot(rng, widen * w[0], w[1]),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Network { aggregation, layers }
    }

    pub fn input_dim(&self) -> usize {
        let rows = self.layers[0].weight.nrows();
        if self.aggregation == Aggregation::ConcatMean {
            rows / 2
        } else {
            rows
        }
    }

    fn aggregate(&self, h: &Array2<f64>, op: &Operator) -> Array2<f64> {
        match (self.aggregation, op) {
            (Aggregation::None, _) => h.clone(),
            (Aggregation::Propagate, Operator::Symmetric(p)) => p.mul(h.view()),
            (Aggregation::ConcatMean, Operator::Mean { forward, .. }) => {
                concatenate(Axis(1), &[h.view(), forward.mul(h.view()).view()]).expect("equal row counts")
            }
            _ => panic!("operator does not match {:?} aggregation", self.aggregation),
        }
    }

    fn aggregate_backward(&self, grad: &Array2<f64>, op: &Operator) -> Array2<f64> {
        match (self.aggregation, op) {
            (Aggregation::None, _) => grad.clone(),
            (Aggregation::Propagate, Operator::Symmetric(p)) => p.mul(grad.view()),
            (Aggregation::ConcatMean, Operator::Mean { transpose, .. }) => {
                let d = grad.ncols() / 2;
                let mut out = grad.slice(s![.., ..d]).to_owned();
                out += &transpose.mul(grad.slice(s![.., d..]));
                out
            }
            _ => panic!("operator does not match {:?} aggregation", self.aggregation),
        }
    }

    pub fn forward(&self, x: &Array2<f64>, op: &Operator) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let u = self.aggregate(&h, op);
            let z = u.dot(&layer.weight) + &layer.bias;
            if l + 1 < self.layers.len() {
                h = z.mapv(|v| v.max(0.0));
            }
            inputs.push(u);
            pre.push(z);
        }
        ForwardCache { inputs, pre }
    }

    /// Gradients of all parameters given `d loss / d logits`.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &Array1<f64>, op: &Operator) -> Vec<Dense> {
        let mut grads: Vec<Dense> = self.layers.iter().map(Dense::zeros_like).collect();
        let mut dz = dlogits.clone().insert_axis(Axis(1));
        for l in (0..self.layers.len()).rev() {
            grads[l].weight = cache.inputs[l].t().dot(&dz);
            grads[l].bias = dz.sum_axis(Axis(0));
            if l == 0 {
                break;
            }
            let du = dz.dot(&self.layers[l].weight.t());
            let dh = self.aggregate_backward(&du, op);
            let prev = &cache.pre[l - 1];
            dz = ndarray::Zip::from(&dh).and(prev).map_collect(|&g, &z| if z > 0.0 { g } else { 0.0 });
        }
        grads
    }

    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().map(|d| d.weight.iter().map(|w| w * w).sum::<f64>()).sum()
    }

    /// Visits every scalar parameter with a mutable reference, weights
    /// before biases, layer by layer.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|d| d.weight.iter_mut().chain(d.bias.iter_mut()))
    }
}

/// Flattens gradients in the order of [`Network::params_mut`].
pub fn flatten(grads: &[Dense]) -> Vec<f64> {
    grads
        .iter()
        .flat_map(|d| d.weight.iter().chain(d.bias.iter()).copied())
        .collect()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z)) - y z`, stable for large `|z|`.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

/// Weighted mean cross-entropy over `(node, weight)` pairs plus the L2
/// penalty `0.5 * decay * |W|^2`. Returns the loss and `d loss / d logits`.
pub fn loss_and_grad(
    net: &Network,
    logits: &Array1<f64>,
    labels: &[u8],
    targets: &[(usize, f64)],
    decay: f64,
) -> (f64, Array1<f64>) {
    let total: f64 = targets.iter().map(|t| t.1).sum();
    let mut loss = 0.0;
    let mut grad = Array1::zeros(logits.len());
    for &(i, w) in targets {
        let y = labels[i] as f64;
        loss += w * bce_with_logit(logits[i], y);
        grad[i] += w * (sigmoid(logits[i]) - y) / total;
    }
    (loss / total + 0.5 * decay * net.weight_norm_sq(), grad)
}

/// Adds the L2 penalty gradient to the weight gradients.
pub fn add_decay(net: &Network, grads: &mut [Dense], decay: f64) {
    for (g, layer) in grads.iter_mut().zip(&net.layers) {
        g.weight.scaled_add(decay, &layer.weight);
    }
}
