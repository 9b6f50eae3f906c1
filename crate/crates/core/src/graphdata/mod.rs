//! Attributed multi-relational graphs built from transaction logs.

mod features;
mod graph;
mod io;

pub use features::{extract_features, imbalance_ratio, NodeTable, FEATURE_DIM, FEATURE_NAMES};
pub use graph::{build_graph, Edge, MultiGraph, WindowSpec};
pub use io::{
    export_dataset, format_feature, load_dataset, Dataset, ACCOUNTS_FILE, FEATURES_FILE, TRANSACTIONS_FILE,
};
