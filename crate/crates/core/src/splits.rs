//! Stratified and temporal split protocols.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphdata::{build_graph, extract_features, MultiGraph, NodeTable, WindowSpec};
use crate::rng::{stream_rng, Stream};
use crate::simcore::{AccountTable, TransactionLog};

pub const SPLITS_FILE: &str = "splits.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
    Excluded,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Validation => "validation",
            SplitTag::Test => "test",
            SplitTag::Excluded => "excluded",
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(SplitTag::Train),
            "validation" => Ok(SplitTag::Validation),
            "test" => Ok(SplitTag::Test),
            "excluded" => Ok(SplitTag::Excluded),
            other => Err(format!("unknown split tag `{other}`")),
        }
    }
}

/// One tag per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    tags: Vec<SplitTag>,
}

impl SplitAssignment {
    pub fn new(tags: Vec<SplitTag>) -> Self {
        SplitAssignment { tags }
    }

    pub fn tags(&self) -> &[SplitTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn nodes(&self, tag: SplitTag) -> Vec<usize> {
        self.tags
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == tag)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn mask(&self, tag: SplitTag) -> Vec<bool> {
        self.tags.iter().map(|t| *t == tag).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("node_id,tag\n");
        for (i, t) in self.tags.iter().enumerate() {
            out.push_str(&format!("{i},{t}\n"));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        if lines.next() != Some("node_id,tag") {
            return Err(Error::schema(&name, 1, "expected header `node_id,tag`"));
        }
        let mut tags = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i as u64 + 2;
            let (id, tag) = line
                .split_once(',')
                .ok_or_else(|| Error::schema(&name, lineno, "expected two columns"))?;
            if id.parse::<usize>().ok() != Some(tags.len()) {
                return Err(Error::schema(&name, lineno, format!("node ids must be contiguous; got `{id}`")));
            }
            tags.push(tag.parse().map_err(|e: String| Error::schema(&name, lineno, e))?);
        }
        Ok(SplitAssignment { tags })
    }
}

/// Part sizes for `n` items by largest remainder; ties go to the earlier part.
fn largest_remainder(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c = q.floor() as usize;
    }
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &part in order.iter().take(n.saturating_sub(assigned)) {
        counts[part] += 1;
    }
    counts
}

/// Per-class shuffle-and-cut into train/validation/test.
pub fn stratified_split(labels: &[u8], ratios: [f64; 3], seed: u64) -> Result<SplitAssignment> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Ratio(format!("every part must be positive, got {ratios:?}")));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Ratio(format!("ratios sum to {sum}, not 1")));
    }
    let mut rng = stream_rng(seed, Stream::Split, 0);
    let mut tags = vec![SplitTag::Excluded; labels.len()];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 3 {
            return Err(Error::TinyClass {
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let [train, val, _] = largest_remainder(members.len(), &ratios);
        for (pos, &node) in members.iter().enumerate() {
            tags[node] = if pos < train {
                SplitTag::Train
            } else if pos < train + val {
                SplitTag::Validation
            } else {
                SplitTag::Test
            };
        }
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(Error::Shape(format!("label {} at node {i} is not binary", labels[i])));
    }
    Ok(SplitAssignment { tags })
}

/// Graph, features and activity-based tags for one month window.
#[derive(Debug, Clone)]
pub struct WindowData {
    pub window: WindowSpec,
    pub graph: MultiGraph,
    pub nodes: NodeTable,
    /// `role` for active nodes, `Excluded` otherwise.
    pub split: SplitAssignment,
}

fn window_data(log: &TransactionLog, accounts: &AccountTable, window: WindowSpec, role: SplitTag) -> Result<WindowData> {
    let graph = build_graph(log, accounts, window)?;
    let nodes = extract_features(log, accounts, window)?;
    let split = SplitAssignment::new(
        nodes
            .active
            .iter()
            .map(|&a| if a { role } else { SplitTag::Excluded })
            .collect(),
    );
    Ok(WindowData {
        window,
        graph,
        nodes,
        split,
    })
}

/// Checks windows are disjoint and strictly increasing.
pub fn check_ordered(windows: &[WindowSpec]) -> Result<()> {
    for w in windows {
        w.validate(None)?;
    }
    for pair in windows.windows(2) {
        if pair[1].first_month <= pair[0].last_month {
            return Err(Error::Overlap(format!("{} then {}", pair[0], pair[1])));
        }
    }
    Ok(())
}

/// Builds one dataset for the training window (active nodes tagged
/// `Train`) and one per test window (active nodes tagged `Test`).
pub fn temporal_windows(
    log: &TransactionLog,
    accounts: &AccountTable,
    train: WindowSpec,
    tests: &[WindowSpec],
) -> Result<Vec<WindowData>> {
    let mut all = vec![train];
    all.extend_from_slice(tests);
    check_ordered(&all)?;
    all.iter()
        .enumerate()
        .map(|(i, &w)| window_data(log, accounts, w, if i == 0 { SplitTag::Train } else { SplitTag::Test }))
        .collect()
}
