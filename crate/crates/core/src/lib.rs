//! Synthetic transaction graphs with controlled class imbalance and concept
//! drift, reference fraud classifiers, and the harness that measures how
//! they degrade.

pub mod bench;
pub mod error;
pub mod graphdata;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod simcore;
pub mod splits;

pub use error::{Error, Result};
