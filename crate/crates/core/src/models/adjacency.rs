use ndarray::Array2;

use super::sparse::SparseMatrix;
use crate::error::Result;
use crate::graphdata::MultiGraph;

/// `D^-1/2 (A + I) D^-1/2` for one relation, where `A` is the binary
/// symmetrised adjacency (weights ignored) and `D` the degree of `A + I`.
pub fn normalized_adjacency_sparse(graph: &MultiGraph, relation: usize) -> Result<SparseMatrix> {
    let neighbors = graph.undirected_neighbors(relation)?;
    let inv_sqrt: Vec<f64> = neighbors.iter().map(|n| 1.0 / ((n.len() + 1) as f64).sqrt()).collect();
    let rows = neighbors
        .iter()
        .enumerate()
        .map(|(i, list)| {
            let mut row: Vec<(usize, f64)> = list.iter().map(|&j| (j, inv_sqrt[i] * inv_sqrt[j])).collect();
            let pos = row.partition_point(|&(j, _)| j < i);
            row.insert(pos, (i, inv_sqrt[i] * inv_sqrt[i]));
            row
        })
        .collect();
    Ok(SparseMatrix::from_rows(rows))
}

/// Dense symmetric normalised adjacency with self-loops for `relation`.
pub fn normalized_adjacency(graph: &MultiGraph, relation: usize) -> Result<Array2<f64>> {
    Ok(normalized_adjacency_sparse(graph, relation)?.to_dense())
}

/// Graph-convolution operator: per-relation normalised adjacencies averaged
/// element-wise.
pub fn gcn_operator(graph: &MultiGraph) -> SparseMatrix {
    let per_relation: Vec<SparseMatrix> = (0..graph.relation_count())
        .map(|r| normalized_adjacency_sparse(graph, r).expect("relation index in range"))
        .collect();
    if per_relation.len() == 1 {
        return per_relation.into_iter().next().unwrap();
    }
    SparseMatrix::mean(&per_relation)
}

/// Row-normalised neighbour mean (no self term), averaged over relations.
/// Isolated nodes get an all-zero row.
pub fn mean_operator(graph: &MultiGraph) -> SparseMatrix {
    let per_relation: Vec<SparseMatrix> = (0..graph.relation_count())
        .map(|r| {
            let neighbors = graph.undirected_neighbors(r).expect("relation index in range");
            SparseMatrix::from_rows(
                neighbors
                    .iter()
                    .map(|list| {
                        let w = 1.0 / list.len().max(1) as f64;
                        list.iter().map(|&j| (j, w)).collect()
                    })
                    .collect(),
            )
        })
        .collect();
    if per_relation.len() == 1 {
        return per_relation.into_iter().next().unwrap();
    }
    SparseMatrix::mean(&per_relation)
}
