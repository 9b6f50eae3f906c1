//! Reference classifiers: a majority baseline, a feature-only logistic
//! model, a graph convolution network, a mean-aggregator variant and a
//! pick/choose rebalanced convolution network.

mod adjacency;
pub mod gradcheck;
mod network;
mod optim;
mod pcgnn;
mod persist;
mod sparse;
mod spec;
mod standardize;
mod train;

pub use adjacency::{gcn_operator, mean_operator, normalized_adjacency, normalized_adjacency_sparse};
pub use gradcheck::{gradient_check, random_point};
pub use network::{sigmoid, Aggregation, Dense, Network};
pub use optim::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use pcgnn::{pcgnn_rebalance, Rebalanced};
pub use persist::{load_model, model_from_json, model_to_json, save_model, MODEL_FILE};
pub use sparse::SparseMatrix;
pub use spec::{ClassWeighting, Distance, ModelKind, ModelSpec, PcgnnParams, TrainConfig};
pub use standardize::Standardizer;
pub use train::{predict_scores, train_model, train_with_validation, TrainedModel, TrainingMeta, ValidationSet};
