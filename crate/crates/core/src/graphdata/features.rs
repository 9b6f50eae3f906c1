use std::collections::BTreeSet;

use ndarray::Array2;

use super::graph::{check_accounts, WindowSpec};
use crate::error::{Error, Result};
use crate::simcore::{AccountTable, TransactionLog};

/// Column order of the per-node feature matrix.
pub const FEATURE_NAMES: [&str; 14] = [
    "in_count",
    "out_count",
    "total_in",
    "total_out",
    "mean_in",
    "mean_out",
    "std_in",
    "std_out",
    "max_in",
    "max_out",
    "min_in",
    "min_out",
    "distinct_counterparties",
    "active_month_count",
];

pub const FEATURE_DIM: usize = FEATURE_NAMES.len();

/// Node features, static labels and activity flags for one time window.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub active: Vec<bool>,
}

impl NodeTable {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, active: Vec<bool>) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n || active.len() != n {
            return Err(Error::Shape(format!(
                "{n} feature rows, {} labels, {} activity flags",
                labels.len(),
                active.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Shape("labels must be 0 or 1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite feature value".into()));
        }
        Ok(NodeTable {
            features,
            labels,
            active,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Summary of one side (incoming or outgoing) of a node's transactions.
#[derive(Default)]
struct Side {
    amounts: Vec<f64>,
}

impl Side {
    /// count, total, mean, population std, max, min; zeros when empty.
    fn summary(&self) -> [f64; 6] {
        let n = self.amounts.len();
        if n == 0 {
            return [0.0; 6];
        }
        let total: f64 = self.amounts.iter().sum();
        let mean = total / n as f64;
        let var = self.amounts.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
        let max = self.amounts.iter().copied().fold(f64::MIN, f64::max);
        let min = self.amounts.iter().copied().fold(f64::MAX, f64::min);
        [n as f64, total, mean, var.sqrt(), max, min]
    }
}

/// Computes the 14 aggregate features of every account from the
/// transactions inside `window`.
pub fn extract_features(log: &TransactionLog, accounts: &AccountTable, window: WindowSpec) -> Result<NodeTable> {
    window.validate(None)?;
    check_accounts(log, accounts)?;
    let n = accounts.len();
    let mut incoming: Vec<Side> = (0..n).map(|_| Side::default()).collect();
    let mut outgoing: Vec<Side> = (0..n).map(|_| Side::default()).collect();
    let mut counterparties: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut months: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for t in log.iter().filter(|t| window.contains(t.month)) {
        let amount = t.amount.as_f64();
        outgoing[t.src].amounts.push(amount);
        incoming[t.dst].amounts.push(amount);
        counterparties[t.src].insert(t.dst);
        counterparties[t.dst].insert(t.src);
        months[t.src].insert(t.month);
        months[t.dst].insert(t.month);
    }

    let mut features = Array2::zeros((n, FEATURE_DIM));
    let mut active = vec![false; n];
    for i in 0..n {
        let [ic, it, im, is, ix, imin] = incoming[i].summary();
        let [oc, ot, om, os, ox, omin] = outgoing[i].summary();
        let row = [
            ic,
            oc,
            it,
            ot,
            im,
            om,
            is,
            os,
            ix,
            ox,
            imin,
            omin,
            counterparties[i].len() as f64,
            months[i].len() as f64,
        ];
        for (j, v) in row.into_iter().enumerate() {
            features[[i, j]] = v;
        }
        active[i] = ic + oc > 0.0;
    }
    NodeTable::new(features, accounts.labels().to_vec(), active)
}

/// Majority-to-minority ratio `|legit| / |fraud|` over binary labels.
pub fn imbalance_ratio(labels: &[u8]) -> Result<f64> {
    let fraud = labels.iter().filter(|&&l| l == 1).count();
    if fraud == 0 {
        return Err(Error::UndefinedRatio);
    }
    let legit = labels.iter().filter(|&&l| l == 0).count();
    Ok(legit as f64 / fraud as f64)
}
