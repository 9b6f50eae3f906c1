use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{AccountTable, TransactionLog};

/// Inclusive month range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub first_month: u32,
    pub last_month: u32,
}

impl WindowSpec {
    pub fn new(first_month: u32, last_month: u32) -> Result<Self> {
        let w = WindowSpec {
            first_month,
            last_month,
        };
        w.validate(None)?;
        Ok(w)
    }

    /// Checks `1 <= first <= last`, and `last <= months` when a horizon is given.
    pub fn validate(&self, months: Option<u32>) -> Result<()> {
        let within = months.is_none_or(|m| self.last_month <= m);
        if self.first_month < 1 || self.first_month > self.last_month || !within {
            return Err(Error::Range {
                what: "window",
                detail: format!(
                    "{}..={} invalid{}",
                    self.first_month,
                    self.last_month,
                    months.map(|m| format!(" for a {m}-month horizon")).unwrap_or_default()
                ),
            });
        }
        Ok(())
    }

    pub fn contains(&self, month: u32) -> bool {
        (self.first_month..=self.last_month).contains(&month)
    }

    pub fn all(months: u32) -> Self {
        WindowSpec {
            first_month: 1,
            last_month: months.max(1),
        }
    }
}

impl std::fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.first_month, self.last_month)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    /// Number of transactions aggregated into this edge.
    pub weight: u64,
}

/// Directed multi-relational graph over account nodes. Each relation holds
/// at most one edge per ordered pair, sorted by `(src, dst)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    node_count: usize,
    relations: Vec<Vec<Edge>>,
}

impl MultiGraph {
    /// Builds a graph from per-relation edge lists, merging duplicate
    /// ordered pairs by summing weights.
    pub fn from_edges(node_count: usize, relations: Vec<Vec<Edge>>) -> Result<Self> {
        let mut merged = Vec::with_capacity(relations.len());
        for edges in relations {
            let mut acc: BTreeMap<(usize, usize), u64> = BTreeMap::new();
            for e in edges {
                if e.src >= node_count || e.dst >= node_count {
                    return Err(Error::Shape(format!(
                        "edge {}->{} outside {node_count} nodes",
                        e.src, e.dst
                    )));
                }
                if e.src == e.dst {
                    return Err(Error::Shape(format!("self-loop on node {}", e.src)));
                }
                if e.weight == 0 {
                    return Err(Error::Shape(format!("edge {}->{} has zero weight", e.src, e.dst)));
                }
                *acc.entry((e.src, e.dst)).or_default() += e.weight;
            }
            merged.push(
                acc.into_iter()
                    .map(|((src, dst), weight)| Edge { src, dst, weight })
                    .collect(),
            );
        }
        if merged.is_empty() {
            merged.push(Vec::new());
        }
        Ok(MultiGraph {
            node_count,
            relations: merged,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn edges(&self, relation: usize) -> Result<&[Edge]> {
        self.relations
            .get(relation)
            .map(Vec::as_slice)
            .ok_or(Error::Relation {
                relation,
                available: self.relations.len(),
            })
    }

    pub fn relations(&self) -> impl Iterator<Item = &[Edge]> {
        self.relations.iter().map(Vec::as_slice)
    }

    pub fn edge_count(&self) -> usize {
        self.relations.iter().map(Vec::len).sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.relations.iter().flatten().map(|e| e.weight).sum()
    }

    /// Sorted, deduplicated neighbours ignoring direction, for one relation.
    pub fn undirected_neighbors(&self, relation: usize) -> Result<Vec<Vec<usize>>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in self.edges(relation)? {
            adj[e.src].push(e.dst);
            adj[e.dst].push(e.src);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(adj)
    }

    /// Undirected neighbours over the union of all relations.
    pub fn union_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in self.relations.iter().flatten() {
            adj[e.src].push(e.dst);
            adj[e.dst].push(e.src);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

pub(crate) fn check_accounts(log: &TransactionLog, accounts: &AccountTable) -> Result<()> {
    let n = accounts.len();
    for t in log.iter() {
        for account in [t.src, t.dst] {
            if account >= n {
                return Err(Error::DanglingAccount {
                    tx_id: t.tx_id,
                    account: account as u64,
                });
            }
        }
    }
    Ok(())
}

/// Aggregates the in-window transactions into one weighted edge per
/// (relation, src, dst). All accounts become nodes.
pub fn build_graph(log: &TransactionLog, accounts: &AccountTable, window: WindowSpec) -> Result<MultiGraph> {
    window.validate(None)?;
    check_accounts(log, accounts)?;
    let mut acc: Vec<BTreeMap<(usize, usize), u64>> = vec![BTreeMap::new(); log.relation_count()];
    for t in log.iter().filter(|t| window.contains(t.month)) {
        *acc[t.relation].entry((t.src, t.dst)).or_default() += 1;
    }
    let relations = acc
        .into_iter()
        .map(|m| {
            m.into_iter()
                .map(|((src, dst), weight)| Edge { src, dst, weight })
                .collect()
        })
        .collect();
    Ok(MultiGraph {
        node_count: accounts.len(),
        relations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{Amount, Transaction};

    fn tx(id: u64, src: usize, dst: usize, month: u32) -> Transaction {
        Transaction {
            tx_id: id,
            src,
            dst,
            amount: Amount::from_cents(100),
            month,
            relation: 0,
            illicit: false,
        }
    }

    #[test]
    fn empty_log_gives_isolated_nodes() {
        let g = build_graph(&TransactionLog::default(), &AccountTable::new(vec![0; 4]), WindowSpec::all(12)).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn multiplicity_becomes_weight() {
        let log = TransactionLog::new(vec![tx(0, 3, 7, 1), tx(1, 3, 7, 2), tx(2, 7, 3, 9)]);
        let g = build_graph(&log, &AccountTable::new(vec![0; 8]), WindowSpec::new(1, 4).unwrap()).unwrap();
        assert_eq!(g.edges(0).unwrap(), &[Edge { src: 3, dst: 7, weight: 2 }]);
        assert_eq!(g.total_weight(), 2);
    }

    #[test]
    fn dangling_account_rejected() {
        let log = TransactionLog::new(vec![tx(0, 0, 5, 1)]);
        let err = build_graph(&log, &AccountTable::new(vec![0; 3]), WindowSpec::all(12)).unwrap_err();
        assert!(matches!(err, Error::DanglingAccount { tx_id: 0, account: 5 }));
    }

    #[test]
    fn window_validation() {
        assert!(WindowSpec::new(0, 3).is_err());
        assert!(WindowSpec::new(5, 4).is_err());
        assert!(WindowSpec::new(9, 12).unwrap().validate(Some(11)).is_err());
    }

    #[test]
    fn missing_relation() {
        let g = MultiGraph::from_edges(2, vec![vec![]]).unwrap();
        assert!(matches!(g.edges(1), Err(Error::Relation { relation: 1, available: 1 })));
    }
}
