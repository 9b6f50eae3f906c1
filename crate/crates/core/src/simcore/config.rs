use std::path::Path;

use serde::{Deserialize, Serialize};

use super::drift::DriftSchedule;
use crate::error::{Error, Result};

/// Share of the illicit transaction budget spent on structured typologies
/// when a config does not list them explicitly.
pub const DEFAULT_TYPOLOGY_SHARE: f64 = 0.5;
/// Members per instance in the default typology mix.
pub const DEFAULT_TYPOLOGY_MEMBERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypologyKind {
    FanIn,
    FanOut,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypologySpec {
    pub kind: TypologyKind,
    pub member_count: usize,
    pub instances: usize,
    #[serde(default)]
    pub burst: bool,
}

impl TypologySpec {
    /// Transactions emitted by one instance.
    pub fn transactions_per_instance(&self) -> usize {
        match self.kind {
            TypologyKind::FanIn | TypologyKind::FanOut => self.member_count.saturating_sub(1),
            TypologyKind::Cycle => self.member_count,
        }
    }

    pub fn total_transactions(&self) -> usize {
        self.transactions_per_instance() * self.instances
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let field = format!("typologies[{idx}]");
        if self.member_count < 2 {
            return Err(Error::config(format!("{field}.member_count"), "must be at least 2"));
        }
        if self.kind == TypologyKind::Cycle && self.member_count < 3 {
            return Err(Error::config(format!("{field}.member_count"), "a cycle needs at least 3 members"));
        }
        if self.instances < 1 {
            return Err(Error::config(format!("{field}.instances"), "must be at least 1"));
        }
        Ok(())
    }
}

/// Default mix: 40% fan-in, 40% fan-out and 20% cycle instances of five
/// members, sized to spend about [`DEFAULT_TYPOLOGY_SHARE`] of the budget.
pub fn default_typology_mix(illicit_transactions: usize) -> Vec<TypologySpec> {
    let m = DEFAULT_TYPOLOGY_MEMBERS;
    // 0.4*(m-1) + 0.4*(m-1) + 0.2*m transactions per average instance
    let per_instance = 0.8 * (m - 1) as f64 + 0.2 * m as f64;
    let total = (illicit_transactions as f64 * DEFAULT_TYPOLOGY_SHARE / per_instance).floor() as usize;
    let fan = (total as f64 * 0.4).round() as usize;
    let cycle = total.saturating_sub(2 * fan);
    [(TypologyKind::FanIn, fan), (TypologyKind::FanOut, fan), (TypologyKind::Cycle, cycle)]
        .into_iter()
        .filter(|(_, n)| *n > 0)
        .map(|(kind, instances)| TypologySpec {
            kind,
            member_count: m,
            instances,
            burst: false,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmountModel {
    pub legit_mean: f64,
    pub illicit_mean: f64,
    #[serde(default = "default_cv")]
    pub cv: f64,
}

fn default_cv() -> f64 {
    0.5
}

fn default_months() -> u32 {
    12
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub enabled: bool,
    #[serde(default)]
    pub legit_means: Vec<f64>,
    #[serde(default)]
    pub illicit_means: Vec<f64>,
}

/// Simulator parameters, read verbatim from the JSON config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub legit_accounts: usize,
    pub illicit_accounts: usize,
    pub legit_transactions: usize,
    pub illicit_transactions: usize,
    #[serde(default = "default_months")]
    pub months: u32,
    pub seed: u64,
    pub amount: AmountModel,
    #[serde(default)]
    pub drift: DriftConfig,
    /// `None` selects [`default_typology_mix`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typologies: Option<Vec<TypologySpec>>,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "simulator config".into(),
            source,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    pub fn total_accounts(&self) -> usize {
        self.legit_accounts + self.illicit_accounts
    }

    pub fn resolved_typologies(&self) -> Vec<TypologySpec> {
        match &self.typologies {
            Some(list) => list.clone(),
            None => default_typology_mix(self.illicit_transactions),
        }
    }

    pub fn schedule(&self) -> Result<Option<DriftSchedule>> {
        if !self.drift.enabled {
            return Ok(None);
        }
        let schedule = DriftSchedule::new(self.drift.legit_means.clone(), self.drift.illicit_means.clone())?;
        if schedule.months() != self.months {
            return Err(Error::config(
                "drift",
                format!("curves span {} months, config has {}", schedule.months(), self.months),
            ));
        }
        Ok(Some(schedule))
    }

    /// Checks every precondition of [`super::generate`].
    pub fn validate(&self) -> Result<()> {
        if self.months < 1 {
            return Err(Error::config("months", "must be at least 1"));
        }
        let a = &self.amount;
        if !(a.cv.is_finite() && a.cv > 0.0) {
            return Err(Error::config("amount.cv", "must be positive"));
        }
        if !(a.legit_mean.is_finite() && a.legit_mean > 0.0) {
            return Err(Error::config("amount.legit_mean", "must be positive"));
        }
        if !(a.illicit_mean.is_finite() && a.illicit_mean > 0.0) {
            return Err(Error::config("amount.illicit_mean", "must be positive"));
        }
        self.schedule()?;
        if self.legit_transactions > 0 && self.legit_accounts < 2 {
            return Err(Error::config("legit_accounts", "at least 2 needed when legit_transactions > 0"));
        }
        if self.illicit_transactions > 0 && (self.illicit_accounts < 1 || self.total_accounts() < 2) {
            return Err(Error::config(
                "illicit_accounts",
                "illicit transactions need an illicit source and a distinct destination",
            ));
        }
        let typologies = self.resolved_typologies();
        let mut budget = 0usize;
        for (idx, t) in typologies.iter().enumerate() {
            t.validate(idx)?;
            if t.member_count > self.illicit_accounts {
                return Err(Error::Capacity {
                    needed: t.member_count,
                    available: self.illicit_accounts,
                });
            }
            budget += t.total_transactions();
        }
        if budget > self.illicit_transactions {
            return Err(Error::config(
                "typologies",
                format!(
                    "typologies emit {budget} transactions, illicit budget is {}",
                    self.illicit_transactions
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "legit_accounts": 10, "illicit_accounts": 5,
        "legit_transactions": 100, "illicit_transactions": 20,
        "months": 12, "seed": 3,
        "amount": {"legit_mean": 100.0, "illicit_mean": 300.0, "cv": 0.5},
        "drift": {"enabled": false, "legit_means": [], "illicit_means": []},
        "typologies": [{"kind": "fan_in", "member_count": 5, "instances": 2, "burst": false}]
    }"#;

    #[test]
    fn parses_documented_keys() {
        let cfg = SimConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.legit_accounts, 10);
        assert_eq!(cfg.resolved_typologies()[0].kind, TypologyKind::FanIn);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("\"seed\": 3", "\"seed\": 3, \"bogus\": 1");
        assert!(matches!(SimConfig::from_json(&text), Err(Error::Json { .. })));
        let nested = MINIMAL.replace("\"cv\": 0.5", "\"cv\": 0.5, \"sd\": 2");
        assert!(SimConfig::from_json(&nested).is_err());
    }

    #[test]
    fn capacity_and_precondition_errors() {
        let mut cfg = SimConfig::from_json(MINIMAL).unwrap();
        cfg.typologies.as_mut().unwrap()[0].member_count = 6;
        assert!(matches!(cfg.validate(), Err(Error::Capacity { needed: 6, available: 5 })));

        let mut cfg = SimConfig::from_json(MINIMAL).unwrap();
        cfg.typologies.as_mut().unwrap()[0] = TypologySpec {
            kind: TypologyKind::Cycle,
            member_count: 2,
            instances: 1,
            burst: false,
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field.ends_with("member_count")));

        let mut cfg = SimConfig::from_json(MINIMAL).unwrap();
        cfg.amount.cv = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "amount.cv"));

        let mut cfg = SimConfig::from_json(MINIMAL).unwrap();
        cfg.illicit_transactions = 7;
        assert!(matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "typologies"));

        let mut cfg = SimConfig::from_json(MINIMAL).unwrap();
        cfg.drift = DriftConfig {
            enabled: true,
            legit_means: vec![1.0; 11],
            illicit_means: vec![1.0; 11],
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "drift"));
    }

    #[test]
    fn default_mix_proportions() {
        let mix = default_typology_mix(5000);
        let count = |k| mix.iter().find(|t| t.kind == k).map_or(0, |t| t.instances);
        let total = count(TypologyKind::FanIn) + count(TypologyKind::FanOut) + count(TypologyKind::Cycle);
        assert_eq!(count(TypologyKind::FanIn), count(TypologyKind::FanOut));
        assert!((count(TypologyKind::Cycle) as f64 / total as f64 - 0.2).abs() < 0.01);
        let spent: usize = mix.iter().map(TypologySpec::total_transactions).sum();
        assert!(spent <= 5000 && spent as f64 >= 0.45 * 5000.0);
    }
}
