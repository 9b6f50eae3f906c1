//! Deterministic multi-agent transaction simulator.
//!
//! Produces a labelled [`TransactionLog`] and [`AccountTable`] from a
//! [`SimConfig`], with exact per-class counts, structured laundering
//! typologies among illicit accounts and optional month-by-month drift of
//! the per-class mean amount.

mod config;
mod drift;
mod generate;
mod log;

pub use config::{
    default_typology_mix, AmountModel, DriftConfig, SimConfig, TypologyKind, TypologySpec,
    DEFAULT_TYPOLOGY_MEMBERS, DEFAULT_TYPOLOGY_SHARE,
};
pub use drift::{default_crossing_schedule, DriftSchedule};
pub use generate::{generate, monthly_means, MonthlyMean};
pub use log::{AccountTable, Amount, Transaction, TransactionLog};
