//! Pick / choose rebalancing of the training graph.
//!
//! Pick draws training nodes with probability inversely proportional to
//! their class frequency. Choose rewires each picked node's neighbourhood:
//! minority nodes gain edges to their nearest minority training nodes, and
//! majority nodes keep only their nearest neighbours. Aggregation then runs
//! over the rebalanced subgraph during training.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use super::spec::{Distance, PcgnnParams};
use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::graphdata::{Edge, MultiGraph, NodeTable};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone)]
pub struct Rebalanced {
    /// Same node set and relations as the input; only chosen edges remain.
    pub subgraph: MultiGraph,
    /// Picked nodes with multiplicity, in draw order.
    pub picked: Vec<usize>,
}

fn cosine_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - a.dot(&b) / (na * nb)
}

/// Choose decisions for every training node, computed once since the
/// distance is fixed.
pub(crate) struct Planner {
    node_count: usize,
    relation_count: usize,
    by_class: [Vec<usize>; 2],
    /// Kept original neighbours of each training node.
    kept: BTreeMap<usize, Vec<usize>>,
    /// Added same-class neighbours of each minority training node.
    added: BTreeMap<usize, Vec<usize>>,
    /// Original directed edges per unordered pair.
    pair_edges: BTreeMap<(usize, usize), Vec<(usize, Edge)>>,
    pick_size: usize,
}

impl Planner {
    /// `x` must already be standardised.
    pub(crate) fn new(
        graph: &MultiGraph,
        x: &Array2<f64>,
        labels: &[u8],
        train_mask: &[bool],
        params: &PcgnnParams,
    ) -> Result<Planner> {
        let n = graph.node_count();
        let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for i in (0..n).filter(|&i| train_mask[i]) {
            by_class[labels[i] as usize].push(i);
        }
        if by_class.iter().any(Vec::is_empty) {
            return Err(Error::DegenerateSplit("rebalancing needs both classes in the training part".into()));
        }
        let minority = if by_class[0].len() < by_class[1].len() { 0 } else { 1 };
        let distance = |a: usize, b: usize| match params.distance {
            Distance::Cosine => cosine_distance(x.row(a), x.row(b)),
        };
        let neighbors = graph.union_neighbors();

        let mut kept = BTreeMap::new();
        let mut added = BTreeMap::new();
        for class in [0u8, 1] {
            for &v in &by_class[class as usize] {
                let nb = &neighbors[v];
                if class == minority {
                    kept.insert(v, nb.clone());
                    let mut candidates: Vec<(f64, usize)> = by_class[minority as usize]
                        .iter()
                        .filter(|&&u| u != v && nb.binary_search(&u).is_err())
                        .map(|&u| (distance(v, u), u))
                        .collect();
                    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    added.insert(v, candidates.into_iter().take(params.oversample_k).map(|c| c.1).collect());
                } else {
                    let keep = (params.undersample_keep * nb.len() as f64).ceil() as usize;
                    let mut ranked: Vec<(f64, usize)> = nb.iter().map(|&u| (distance(v, u), u)).collect();
                    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    let mut chosen: Vec<usize> = ranked.into_iter().take(keep).map(|c| c.1).collect();
                    chosen.sort_unstable();
                    kept.insert(v, chosen);
                }
            }
        }

        let mut pair_edges: BTreeMap<(usize, usize), Vec<(usize, Edge)>> = BTreeMap::new();
        for (r, edges) in graph.relations().enumerate() {
            for e in edges {
                pair_edges
                    .entry((e.src.min(e.dst), e.src.max(e.dst)))
                    .or_default()
                    .push((r, *e));
            }
        }
        let train_count = by_class[0].len() + by_class[1].len();
        Ok(Planner {
            node_count: n,
            relation_count: graph.relation_count(),
            by_class,
            kept,
            added,
            pair_edges,
            pick_size: params.pick_size.unwrap_or(train_count),
        })
    }

    /// Draws a balanced pick and assembles its subgraph.
    pub(crate) fn sample(&self, seed: u64, round: u64) -> Rebalanced {
        let mut rng = stream_rng(seed, Stream::Pick, round);
        // class uniformly, then node uniformly within class: P(node) = 1 / (2 * |class|)
        let picked: Vec<usize> = (0..self.pick_size)
            .map(|_| {
                let members = &self.by_class[rng.random_range(0..2usize)];
                members[rng.random_range(0..members.len())]
            })
            .collect();

        let distinct: BTreeSet<usize> = picked.iter().copied().collect();
        let mut directed: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
        let mut weights: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
        for &v in &distinct {
            for &u in &self.kept[&v] {
                for (r, e) in &self.pair_edges[&(v.min(u), v.max(u))] {
                    if directed.insert((*r, e.src, e.dst)) {
                        weights.insert((*r, e.src, e.dst), e.weight);
                    }
                }
            }
            if let Some(extra) = self.added.get(&v) {
                for &u in extra {
                    if directed.insert((0, v, u)) {
                        weights.insert((0, v, u), 1);
                    }
                }
            }
        }
        let mut relations = vec![Vec::new(); self.relation_count];
        for (r, src, dst) in directed {
            relations[r].push(Edge {
                src,
                dst,
                weight: weights[&(r, src, dst)],
            });
        }
        let subgraph = MultiGraph::from_edges(self.node_count, relations).expect("edges come from a valid graph");
        Rebalanced { subgraph, picked }
    }
}

/// Rebalances `graph` around a class-balanced pick of the training nodes.
/// Distances use features standardised on the training rows. The input
/// graph is not modified.
pub fn pcgnn_rebalance(
    graph: &MultiGraph,
    nodes: &NodeTable,
    train_mask: &[bool],
    params: &PcgnnParams,
    seed: u64,
) -> Result<Rebalanced> {
    if train_mask.len() != graph.node_count() || nodes.node_count() != graph.node_count() {
        return Err(Error::Shape("graph, node table and mask sizes differ".into()));
    }
    if !train_mask.iter().any(|&m| m) {
        return Err(Error::DegenerateSplit("empty training part".into()));
    }
    let x = Standardizer::fit(&nodes.features, train_mask).apply(&nodes.features);
    Ok(Planner::new(graph, &x, &nodes.labels, train_mask, params)?.sample(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn random_graph(n: usize, m: usize, seed: u64) -> MultiGraph {
        let mut rng = stream_rng(seed, Stream::Split, 99);
        let mut edges = Vec::new();
        while edges.len() < m {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b {
                edges.push(Edge { src: a, dst: b, weight: 1 });
            }
        }
        MultiGraph::from_edges(n, vec![edges]).unwrap()
    }

    fn table(n: usize, fraud_every: usize, seed: u64) -> NodeTable {
        let mut rng = stream_rng(seed, Stream::Split, 7);
        let labels: Vec<u8> = (0..n).map(|i| (i % fraud_every == 0) as u8).collect();
        let features = Array2::from_shape_fn((n, 3), |(i, j)| labels[i] as f64 * (j as f64 + 1.0) + rng.random_range(-1.0..1.0));
        NodeTable::new(features, labels, vec![true; n]).unwrap()
    }

    #[test]
    fn pick_is_balanced_under_imbalance() {
        // 20:1 training set; pick 200 -> minority share within [0.4, 0.6]
        let n = 1000;
        let g = random_graph(n, 3000, 1);
        let t = table(n, 20, 2);
        let mask: Vec<bool> = (0..n).map(|i| i % 5 != 4).collect();
        let params = PcgnnParams {
            pick_size: Some(200),
            ..PcgnnParams::default()
        };
        let mut inside = 0;
        for seed in 0..100 {
            let r = pcgnn_rebalance(&g, &t, &mask, &params, seed).unwrap();
            assert_eq!(r.picked.len(), 200);
            assert!(r.picked.iter().all(|&v| mask[v]));
            let frac = r.picked.iter().filter(|&&v| t.labels[v] == 1).count() as f64 / 200.0;
            inside += (0.4..=0.6).contains(&frac) as usize;
        }
        assert!(inside >= 99, "{inside}/100 picks balanced");
    }

    #[test]
    fn identity_parameters_keep_induced_edges() {
        let n = 60;
        let g = random_graph(n, 150, 3);
        let t = table(n, 4, 4);
        let mask = vec![true; n];
        let params = PcgnnParams {
            pick_size: Some(40),
            oversample_k: 0,
            undersample_keep: 1.0,
            ..PcgnnParams::default()
        };
        let before = g.clone();
        let r = pcgnn_rebalance(&g, &t, &mask, &params, 5).unwrap();
        assert_eq!(g, before, "input graph untouched");
        let picked: BTreeSet<usize> = r.picked.iter().copied().collect();
        let expected: Vec<Edge> = g
            .edges(0)
            .unwrap()
            .iter()
            .filter(|e| picked.contains(&e.src) || picked.contains(&e.dst))
            .copied()
            .collect();
        assert_eq!(r.subgraph.edges(0).unwrap(), expected.as_slice());
    }

    #[test]
    fn minority_nodes_only_gain_same_class_edges() {
        let n = 80;
        let g = random_graph(n, 200, 8);
        let t = table(n, 8, 9);
        let mask = vec![true; n];
        let params = PcgnnParams::default();
        let r = pcgnn_rebalance(&g, &t, &mask, &params, 1).unwrap();
        let before = g.union_neighbors();
        let after = r.subgraph.union_neighbors();
        let picked: BTreeSet<usize> = r.picked.iter().copied().collect();
        let mut touched: BTreeSet<usize> = picked.clone();
        for &v in &picked {
            touched.extend(after[v].iter().copied());
            if t.labels[v] == 1 {
                assert!(before[v].iter().all(|u| after[v].contains(u)), "oversampling keeps originals");
                let gained: Vec<usize> = after[v].iter().filter(|u| !before[v].contains(u)).copied().collect();
                assert!(gained.iter().all(|&u| t.labels[u] == 1));
                // the node's own additions are capped at k; other minority nodes may also link to it
                let own: usize = r.subgraph.edges(0).unwrap().iter().filter(|e| e.src == v && !before[v].contains(&e.dst)).count();
                assert!(own <= params.oversample_k);
            } else {
                let keep = (0.5 * before[v].len() as f64).ceil() as usize;
                let own_kept = after[v].iter().filter(|u| before[v].contains(u)).count();
                assert!(own_kept >= keep.min(before[v].len()));
            }
        }
        // every node with an edge is a picked node or one of their chosen neighbours
        for v in 0..n {
            if !after[v].is_empty() {
                assert!(touched.contains(&v));
            }
        }
    }

    #[test]
    fn single_class_training_rejected() {
        let g = random_graph(10, 20, 1);
        let t = table(10, 100, 1);
        let mask: Vec<bool> = (0..10).map(|i| i > 0).collect();
        assert!(matches!(
            pcgnn_rebalance(&g, &t, &mask, &PcgnnParams::default(), 0),
            Err(Error::DegenerateSplit(_))
        ));
    }
}
