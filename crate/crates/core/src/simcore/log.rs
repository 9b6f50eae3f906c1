use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Currency amount in integer cents; rendered with exactly two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Amount(u64);

impl Amount {
    pub fn from_cents(cents: u64) -> Self {
        Amount(cents)
    }

    pub fn cents(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Amount {
    type Err = String;

    /// Accepts `<digits>.<two digits>` only.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (whole, frac) = s
            .split_once('.')
            .ok_or_else(|| format!("amount `{s}` lacks two decimals"))?;
        let digits = |part: &str| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit());
        if !digits(whole) || frac.len() != 2 || !digits(frac) {
            return Err(format!("amount `{s}` must look like 123.45"));
        }
        let whole: u64 = whole.parse().map_err(|e| format!("amount `{s}`: {e}"))?;
        let frac: u64 = frac.parse().map_err(|e| format!("amount `{s}`: {e}"))?;
        whole
            .checked_mul(100)
            .and_then(|c| c.checked_add(frac))
            .map(Amount)
            .ok_or_else(|| format!("amount `{s}` overflows"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_id: u64,
    pub src: usize,
    pub dst: usize,
    pub amount: Amount,
    pub month: u32,
    pub relation: usize,
    /// Provenance: the transaction was emitted by the illicit side of the
    /// simulator. Not visible to models.
    pub illicit: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransactionLog {
    pub records: Vec<Transaction>,
}

impl TransactionLog {
    pub fn new(records: Vec<Transaction>) -> Self {
        TransactionLog { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.records.iter()
    }

    /// Latest month stamp, 0 for an empty log.
    pub fn max_month(&self) -> u32 {
        self.records.iter().map(|t| t.month).max().unwrap_or(0)
    }

    /// Number of relation ids in use (max id + 1); at least 1.
    pub fn relation_count(&self) -> usize {
        self.records.iter().map(|t| t.relation + 1).max().unwrap_or(1)
    }
}

/// Static account labels, 0 legitimate and 1 fraud, indexed by account id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccountTable {
    labels: Vec<u8>,
}

impl AccountTable {
    /// Labels must be 0 or 1; panics otherwise since callers construct
    /// tables from validated input.
    pub fn new(labels: Vec<u8>) -> Self {
        assert!(labels.iter().all(|&l| l <= 1), "account labels must be 0 or 1");
        AccountTable { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, account: usize) -> Option<u8> {
        self.labels.get(account).copied()
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn amount_format() {
        assert_eq!(Amount::from_cents(5).to_string(), "0.05");
        assert_eq!(Amount::from_cents(123456).to_string(), "1234.56");
        assert_eq!("50.00".parse::<Amount>().unwrap(), Amount::from_cents(5000));
        for bad in ["50", "50.0", "50.000", "-1.00", "a.bc", ".50", "1e2.00"] {
            assert!(bad.parse::<Amount>().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn amount_text_round_trip(cents in 0u64..10_000_000_000) {
            let a = Amount::from_cents(cents);
            prop_assert_eq!(a.to_string().parse::<Amount>().unwrap(), a);
        }
    }
}
