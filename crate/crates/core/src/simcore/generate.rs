use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::config::{SimConfig, TypologyKind};
use super::drift::DriftSchedule;
use super::log::{AccountTable, Amount, Transaction, TransactionLog};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Per-class amount law: log-normal with a given arithmetic mean and
/// coefficient of variation.
struct AmountLaw {
    base: [f64; 2],
    schedule: Option<DriftSchedule>,
    sigma: f64,
}

impl AmountLaw {
    fn mean(&self, class: u8, month: u32) -> f64 {
        match &self.schedule {
            Some(s) => s.mean_at(class, month).expect("month validated against schedule"),
            None => self.base[class as usize],
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, class: u8, month: u32) -> Amount {
        let mean = self.mean(class, month);
        let mu = mean.ln() - 0.5 * self.sigma * self.sigma;
        let law = LogNormal::new(mu, self.sigma).expect("sigma is positive and finite");
        let cents = (law.sample(rng) * 100.0).round();
        Amount::from_cents(cents.max(1.0) as u64)
    }
}

struct Draft {
    src: usize,
    dst: usize,
    amount: Amount,
    month: u32,
    illicit: bool,
}

/// Uniform account other than `src` among `0..n`.
fn other_account(rng: &mut ChaCha8Rng, n: usize, src: usize) -> usize {
    let r = rng.random_range(0..n - 1);
    if r >= src {
        r + 1
    } else {
        r
    }
}

/// Runs the simulator. The output depends on `config` alone.
///
/// Typology instances are laid down first among illicit accounts; the rest
/// of the illicit budget goes to random transactions from illicit sources,
/// and legitimate transactions run from legit sources to any other account.
/// The log is ordered by month (stable within a month) and numbered from 0.
pub fn generate(config: &SimConfig) -> Result<(TransactionLog, AccountTable)> {
    config.validate()?;
    let n = config.total_accounts();
    let months = config.months;
    let law = AmountLaw {
        base: [config.amount.legit_mean, config.amount.illicit_mean],
        schedule: config.schedule()?,
        sigma: (1.0 + config.amount.cv * config.amount.cv).ln().sqrt(),
    };

    let mut account_rng = stream_rng(config.seed, Stream::Accounts, 0);
    let mut amount_rng = stream_rng(config.seed, Stream::Amounts, 0);
    let mut month_rng = stream_rng(config.seed, Stream::Months, 0);
    let mut typology_rng = stream_rng(config.seed, Stream::Typologies, 0);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut account_rng);
    let mut labels = vec![0u8; n];
    for &id in &order[..config.illicit_accounts] {
        labels[id] = 1;
    }
    let illicit_ids: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    let legit_ids: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();

    let mut drafts = Vec::with_capacity(config.legit_transactions + config.illicit_transactions);

    for spec in config.resolved_typologies() {
        for _ in 0..spec.instances {
            let members: Vec<usize> = index::sample(&mut typology_rng, illicit_ids.len(), spec.member_count)
                .into_iter()
                .map(|i| illicit_ids[i])
                .collect();
            let burst_month = spec.burst.then(|| month_rng.random_range(1..=months));
            let edges: Vec<(usize, usize)> = match spec.kind {
                TypologyKind::FanIn => members[1..].iter().map(|&m| (m, members[0])).collect(),
                TypologyKind::FanOut => members[1..].iter().map(|&m| (members[0], m)).collect(),
                TypologyKind::Cycle => (0..members.len())
                    .map(|i| (members[i], members[(i + 1) % members.len()]))
                    .collect(),
            };
            for (src, dst) in edges {
                let month = burst_month.unwrap_or_else(|| month_rng.random_range(1..=months));
                drafts.push(Draft {
                    src,
                    dst,
                    amount: law.draw(&mut amount_rng, 1, month),
                    month,
                    illicit: true,
                });
            }
        }
    }

    let remaining = config.illicit_transactions - drafts.len();
    for _ in 0..remaining {
        let src = illicit_ids[account_rng.random_range(0..illicit_ids.len())];
        let dst = other_account(&mut account_rng, n, src);
        let month = month_rng.random_range(1..=months);
        drafts.push(Draft {
            src,
            dst,
            amount: law.draw(&mut amount_rng, 1, month),
            month,
            illicit: true,
        });
    }

    for _ in 0..config.legit_transactions {
        let src = legit_ids[account_rng.random_range(0..legit_ids.len())];
        let dst = other_account(&mut account_rng, n, src);
        let month = month_rng.random_range(1..=months);
        drafts.push(Draft {
            src,
            dst,
            amount: law.draw(&mut amount_rng, 0, month),
            month,
            illicit: false,
        });
    }

    drafts.sort_by_key(|d| d.month);
    let records = drafts
        .into_iter()
        .enumerate()
        .map(|(i, d)| Transaction {
            tx_id: i as u64,
            src: d.src,
            dst: d.dst,
            amount: d.amount,
            month: d.month,
            relation: 0,
            illicit: d.illicit,
        })
        .collect();
    Ok((TransactionLog::new(records), AccountTable::new(labels)))
}

/// One row of the monthly mean-amount table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyMean {
    pub month: u32,
    /// 0 for legitimate-provenance transactions, 1 for illicit.
    pub class: u8,
    pub mean_amount: f64,
    pub count: usize,
}

/// Observed mean amount per (month, provenance class), sorted by month then
/// class. Cells without transactions are omitted.
pub fn monthly_means(log: &TransactionLog) -> Result<Vec<MonthlyMean>> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut cells: std::collections::BTreeMap<(u32, u8), (u64, usize)> = Default::default();
    for t in log.iter() {
        let cell = cells.entry((t.month, t.illicit as u8)).or_default();
        cell.0 += t.amount.cents();
        cell.1 += 1;
    }
    Ok(cells
        .into_iter()
        .map(|((month, class), (cents, count))| MonthlyMean {
            month,
            class,
            mean_amount: cents as f64 / 100.0 / count as f64,
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::config::{AmountModel, DriftConfig, TypologySpec};

    pub(crate) fn config(legit_acc: usize, illicit_acc: usize, legit_tx: usize, illicit_tx: usize) -> SimConfig {
        SimConfig {
            legit_accounts: legit_acc,
            illicit_accounts: illicit_acc,
            legit_transactions: legit_tx,
            illicit_transactions: illicit_tx,
            months: 12,
            seed: 11,
            amount: AmountModel {
                legit_mean: 100.0,
                illicit_mean: 400.0,
                cv: 0.5,
            },
            drift: DriftConfig::default(),
            typologies: None,
        }
    }

    fn typology(kind: TypologyKind, members: usize, burst: bool) -> TypologySpec {
        TypologySpec {
            kind,
            member_count: members,
            instances: 1,
            burst,
        }
    }

    #[test]
    fn record_invariants() {
        let (log, accounts) = generate(&config(200, 40, 2000, 400)).unwrap();
        assert_eq!(accounts.len(), 240);
        let mut last_id = None;
        let mut last_month = 0;
        for t in log.iter() {
            assert_ne!(t.src, t.dst);
            assert!(t.amount.cents() > 0);
            assert!((1..=12).contains(&t.month));
            assert!(t.month >= last_month);
            assert_eq!(t.tx_id, last_id.map_or(0, |i: u64| i + 1));
            last_id = Some(t.tx_id);
            last_month = t.month;
            if t.illicit {
                assert_eq!(accounts.label(t.src), Some(1));
            } else {
                assert_eq!(accounts.label(t.src), Some(0));
            }
        }
    }

    #[test]
    fn empty_fraud_case() {
        let mut cfg = config(50, 0, 300, 0);
        cfg.typologies = Some(vec![]);
        let (log, accounts) = generate(&cfg).unwrap();
        assert_eq!(log.len(), 300);
        assert!(log.iter().all(|t| !t.illicit));
        assert!(accounts.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn typology_shapes() {
        for (kind, k, edges) in [
            (TypologyKind::FanIn, 6, 5),
            (TypologyKind::FanOut, 4, 3),
            (TypologyKind::Cycle, 5, 5),
        ] {
            let mut cfg = config(20, 10, 0, edges);
            cfg.legit_transactions = 0;
            cfg.typologies = Some(vec![typology(kind, k, true)]);
            let (log, _) = generate(&cfg).unwrap();
            assert_eq!(log.len(), edges);
            let months: std::collections::BTreeSet<u32> = log.iter().map(|t| t.month).collect();
            assert_eq!(months.len(), 1, "burst instance spans one month");
            let srcs: std::collections::BTreeSet<usize> = log.iter().map(|t| t.src).collect();
            let dsts: std::collections::BTreeSet<usize> = log.iter().map(|t| t.dst).collect();
            match kind {
                TypologyKind::FanIn => {
                    assert_eq!(dsts.len(), 1);
                    assert_eq!(srcs.len(), k - 1);
                }
                TypologyKind::FanOut => {
                    assert_eq!(srcs.len(), 1);
                    assert_eq!(dsts.len(), k - 1);
                }
                TypologyKind::Cycle => {
                    assert_eq!(srcs, dsts);
                    assert_eq!(srcs.len(), k);
                    // following successors from any member returns after k hops
                    let next: std::collections::BTreeMap<usize, usize> = log.iter().map(|t| (t.src, t.dst)).collect();
                    let start = *srcs.iter().next().unwrap();
                    let mut cur = start;
                    for _ in 0..k {
                        cur = next[&cur];
                    }
                    assert_eq!(cur, start);
                }
            }
        }
    }

    #[test]
    fn determinism() {
        let cfg = config(100, 20, 1000, 200);
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(generate(&cfg).unwrap().0, generate(&other).unwrap().0);
    }

    #[test]
    fn stationary_amount_means() {
        let (log, _) = generate(&config(200, 200, 20_000, 20_000)).unwrap();
        for (illicit, mean) in [(false, 100.0), (true, 400.0)] {
            let amounts: Vec<f64> = log.iter().filter(|t| t.illicit == illicit).map(|t| t.amount.as_f64()).collect();
            let observed = amounts.iter().sum::<f64>() / amounts.len() as f64;
            let se = 0.5 * mean / (amounts.len() as f64).sqrt();
            assert!((observed - mean).abs() < 4.0 * se, "{observed} vs {mean}");
        }
    }

    #[test]
    fn monthly_means_small_cases() {
        let tx = |id, amount, month, illicit| Transaction {
            tx_id: id,
            src: 0,
            dst: 1,
            amount: Amount::from_cents(amount),
            month,
            relation: 0,
            illicit,
        };
        let rows = monthly_means(&TransactionLog::new(vec![tx(0, 5000, 3, false)])).unwrap();
        assert_eq!(
            rows,
            vec![MonthlyMean {
                month: 3,
                class: 0,
                mean_amount: 50.0,
                count: 1
            }]
        );
        let rows = monthly_means(&TransactionLog::new(vec![tx(0, 1000, 1, false), tx(1, 3000, 1, false)])).unwrap();
        assert_eq!(rows[0].mean_amount, 20.0);
        assert_eq!(rows[0].count, 2);
        assert!(matches!(monthly_means(&TransactionLog::default()), Err(Error::EmptyLog)));
    }
}
