//! Classification metrics with fraud (label 1) as the positive class, and
//! multi-seed aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// F1 of class 0 and class 1.
    pub per_class_f1: [f64; 2],
    pub f1_macro: f64,
    pub f1_fraud: f64,
    pub auc: Option<f64>,
    pub counts: Confusion,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class F1 with 0/0 taken as 0. `auc` is left unset.
pub fn classification_metrics(labels: &[u8], predicted: &[u8]) -> Result<MetricsRecord> {
    if labels.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: predicted.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 0 });
    }
    let mut c = Confusion::default();
    for (&y, &p) in labels.iter().zip(predicted) {
        match (y, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fn_ += 1,
            _ => return Err(Error::Shape(format!("non-binary label pair ({y}, {p})"))),
        }
    }
    let f1_fraud = f1(c.tp, c.fp, c.fn_);
    // class 0 as positive: its TP are our TN, its FP our FN
    let f1_legit = f1(c.tn, c.fn_, c.fp);
    Ok(MetricsRecord {
        per_class_f1: [f1_legit, f1_fraud],
        f1_macro: (f1_legit + f1_fraud) / 2.0,
        f1_fraud,
        auc: None,
        counts: c,
    })
}

/// Area under the ROC curve via mid-ranks, O(n log n). Ties count half.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Shape(format!("score {bad} is not finite")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::OneClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their average
        let mid = (i + j + 2) as f64 / 2.0;
        let positives = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += mid * positives as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Scores and hard labels combined: threshold 0.5 for labels, rank AUC.
pub fn evaluate_scores(labels: &[u8], scores: &[f64]) -> Result<MetricsRecord> {
    let predicted: Vec<u8> = scores.iter().map(|&s| (s >= 0.5) as u8).collect();
    let mut record = classification_metrics(labels, &predicted)?;
    record.auc = Some(auc(labels, scores)?);
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample (n - 1) standard deviation.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedMetrics {
    pub f1_macro: Summary,
    pub f1_fraud: Summary,
    pub f1_legit: Summary,
    pub auc: Option<Summary>,
    pub n_runs: usize,
}

impl AggregatedMetrics {
    /// `(name, summary)` pairs in the fixed metrics.csv order.
    pub fn entries(&self) -> Vec<(&'static str, Summary)> {
        let mut out = vec![
            ("f1_macro", self.f1_macro),
            ("f1_fraud", self.f1_fraud),
            ("f1_legit", self.f1_legit),
        ];
        if let Some(a) = self.auc {
            out.push(("auc", a));
        }
        out
    }
}

fn summarize(values: &[f64]) -> Summary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Summary { mean, std: var.sqrt() }
}

/// Mean and sample standard deviation of every metric over runs. AUC is
/// aggregated only when every record carries one.
pub fn aggregate_runs(records: &[MetricsRecord]) -> Result<AggregatedMetrics> {
    if records.len() < 2 {
        return Err(Error::TooFewRuns(records.len()));
    }
    let pick = |f: fn(&MetricsRecord) -> f64| summarize(&records.iter().map(f).collect::<Vec<_>>());
    let aucs: Option<Vec<f64>> = records.iter().map(|r| r.auc).collect();
    Ok(AggregatedMetrics {
        f1_macro: pick(|r| r.f1_macro),
        f1_fraud: pick(|r| r.f1_fraud),
        f1_legit: pick(|r| r.per_class_f1[0]),
        auc: aucs.map(|a| summarize(&a)),
        n_runs: records.len(),
    })
}
