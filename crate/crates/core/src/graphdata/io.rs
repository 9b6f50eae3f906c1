//! Dataset directory persistence.
//!
//! Layout (UTF-8, LF line endings, `.` decimal separator):
//!
//! * `accounts.csv`: `account_id,label`
//! * `transactions.csv`: `tx_id,src,dst,amount,month,relation,illicit`
//! * `features.csv` (optional): `node_id,f0,...,f13`, nine significant digits
//!
//! Writers are byte-deterministic. Readers validate every row and report the
//! offending file and line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::features::NodeTable;
use crate::error::{Error, Result};
use crate::simcore::{AccountTable, Amount, Transaction, TransactionLog};

pub const ACCOUNTS_FILE: &str = "accounts.csv";
pub const TRANSACTIONS_FILE: &str = "transactions.csv";
pub const FEATURES_FILE: &str = "features.csv";

const ACCOUNTS_HEADER: [&str; 2] = ["account_id", "label"];
const TRANSACTIONS_HEADER: [&str; 7] = ["tx_id", "src", "dst", "amount", "month", "relation", "illicit"];

/// A transaction log with its account labels and, optionally, a feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub log: TransactionLog,
    pub accounts: AccountTable,
    pub features: Option<NodeTable>,
}

/// Nine significant digits in scientific notation.
pub fn format_feature(v: f64) -> String {
    format!("{v:.8e}")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn export_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join(ACCOUNTS_FILE);
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    writeln!(w, "{}", ACCOUNTS_HEADER.join(",")).map_err(io)?;
    for (id, label) in dataset.accounts.labels().iter().enumerate() {
        writeln!(w, "{id},{label}").map_err(io)?;
    }
    finish(&path, w)?;

    let path = dir.join(TRANSACTIONS_FILE);
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    writeln!(w, "{}", TRANSACTIONS_HEADER.join(",")).map_err(io)?;
    for t in dataset.log.iter() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            t.tx_id, t.src, t.dst, t.amount, t.month, t.relation, t.illicit as u8
        )
        .map_err(io)?;
    }
    finish(&path, w)?;

    let path = dir.join(FEATURES_FILE);
    match &dataset.features {
        Some(table) => {
            let mut w = create(&path)?;
            let io = |e| Error::io(&path, e);
            let header: Vec<String> = (0..table.dim()).map(|j| format!("f{j}")).collect();
            writeln!(w, "node_id,{}", header.join(",")).map_err(io)?;
            for (i, row) in table.features.rows().into_iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|&v| format_feature(v)).collect();
                writeln!(w, "{i},{}", cells.join(",")).map_err(io)?;
            }
            finish(&path, w)?;
        }
        None => {
            if path.exists() {
                fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    Ok(())
}

struct Sheet {
    name: String,
    reader: csv::Reader<fs::File>,
}

impl Sheet {
    fn open(dir: &Path, name: &str) -> Result<Self> {
        let path = dir.join(name);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        Ok(Sheet {
            name: name.to_string(),
            reader,
        })
    }

    fn header(&mut self) -> Result<Vec<String>> {
        let headers = self
            .reader
            .headers()
            .map_err(|e| Error::schema(&self.name, 1, e.to_string()))?;
        Ok(headers.iter().map(str::to_string).collect())
    }

    fn expect_header(&mut self, expected: &[&str]) -> Result<()> {
        let found = self.header()?;
        if found != expected {
            return Err(Error::schema(
                &self.name,
                1,
                format!("expected header `{}`, found `{}`", expected.join(","), found.join(",")),
            ));
        }
        Ok(())
    }

    /// Calls `f(line, record)` for every data row.
    fn rows(&mut self, mut f: impl FnMut(u64, &csv::StringRecord) -> std::result::Result<(), String>) -> Result<()> {
        for (i, rec) in self.reader.records().enumerate() {
            let fallback = i as u64 + 2;
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(fallback, |p| p.line());
                Error::schema(&self.name, line, e.to_string())
            })?;
            let line = rec.position().map_or(fallback, |p| p.line());
            f(line, &rec).map_err(|reason| Error::schema(&self.name, line, reason))?;
        }
        Ok(())
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(idx).ok_or_else(|| format!("missing column `{name}`"))?;
    raw.parse::<T>().map_err(|e| format!("column `{name}`: `{raw}`: {e}"))
}

fn flag(rec: &csv::StringRecord, idx: usize, name: &str) -> std::result::Result<u8, String> {
    let v: u8 = field(rec, idx, name)?;
    if v > 1 {
        return Err(format!("column `{name}` must be 0 or 1, got {v}"));
    }
    Ok(v)
}

fn load_accounts(dir: &Path) -> Result<AccountTable> {
    let mut sheet = Sheet::open(dir, ACCOUNTS_FILE)?;
    sheet.expect_header(&ACCOUNTS_HEADER)?;
    let mut labels = Vec::new();
    sheet.rows(|_, rec| {
        let id: usize = field(rec, 0, "account_id")?;
        if id != labels.len() {
            return Err(format!("account ids must be contiguous from 0; expected {}, got {id}", labels.len()));
        }
        labels.push(flag(rec, 1, "label")?);
        Ok(())
    })?;
    Ok(AccountTable::new(labels))
}

fn load_transactions(dir: &Path, accounts: usize) -> Result<TransactionLog> {
    let mut sheet = Sheet::open(dir, TRANSACTIONS_FILE)?;
    sheet.expect_header(&TRANSACTIONS_HEADER)?;
    let mut records = Vec::new();
    sheet.rows(|_, rec| {
        let tx_id: u64 = field(rec, 0, "tx_id")?;
        if tx_id != records.len() as u64 {
            return Err(format!("tx_id must run from 0 in steps of 1; expected {}, got {tx_id}", records.len()));
        }
        let src: usize = field(rec, 1, "src")?;
        let dst: usize = field(rec, 2, "dst")?;
        for (name, id) in [("src", src), ("dst", dst)] {
            if id >= accounts {
                return Err(format!("{name} {id} is not a known account (have {accounts})"));
            }
        }
        if src == dst {
            return Err(format!("src equals dst ({src})"));
        }
        let amount: Amount = field(rec, 3, "amount")?;
        if amount.cents() == 0 {
            return Err("amount must be positive".into());
        }
        let month: u32 = field(rec, 4, "month")?;
        if month == 0 {
            return Err("month must be at least 1".into());
        }
        records.push(Transaction {
            tx_id,
            src,
            dst,
            amount,
            month,
            relation: field(rec, 5, "relation")?,
            illicit: flag(rec, 6, "illicit")? == 1,
        });
        Ok(())
    })?;
    Ok(TransactionLog::new(records))
}

fn load_features(dir: &Path, accounts: &AccountTable) -> Result<Option<NodeTable>> {
    if !dir.join(FEATURES_FILE).exists() {
        return Ok(None);
    }
    let mut sheet = Sheet::open(dir, FEATURES_FILE)?;
    let header = sheet.header()?;
    let dim = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("node_id".to_string())
        .chain((0..dim).map(|j| format!("f{j}")))
        .collect();
    if dim == 0 || header != expected {
        return Err(Error::schema(
            FEATURES_FILE,
            1,
            format!("expected header `node_id,f0,...`, found `{}`", header.join(",")),
        ));
    }
    let mut values = Vec::new();
    let mut rows = 0usize;
    sheet.rows(|_, rec| {
        let id: usize = field(rec, 0, "node_id")?;
        if id != rows {
            return Err(format!("node ids must be contiguous from 0; expected {rows}, got {id}"));
        }
        if rec.len() != dim + 1 {
            return Err(format!("expected {} columns, found {}", dim + 1, rec.len()));
        }
        for j in 0..dim {
            let v: f64 = field(rec, j + 1, &format!("f{j}"))?;
            if !v.is_finite() {
                return Err(format!("column f{j} is not finite"));
            }
            values.push(v);
        }
        rows += 1;
        Ok(())
    })?;
    if rows != accounts.len() {
        return Err(Error::schema(
            FEATURES_FILE,
            rows as u64 + 1,
            format!("{rows} feature rows for {} accounts", accounts.len()),
        ));
    }
    let features = Array2::from_shape_vec((rows, dim), values).expect("row count checked");
    // activity is recoverable from the in/out counts when the standard layout is used
    let active = features
        .rows()
        .into_iter()
        .map(|r| if dim >= 2 { r[0] + r[1] > 0.0 } else { true })
        .collect();
    NodeTable::new(features, accounts.labels().to_vec(), active).map(Some)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let accounts = load_accounts(dir)?;
    let log = load_transactions(dir, accounts.len())?;
    let features = load_features(dir, &accounts)?;
    Ok(Dataset {
        log,
        accounts,
        features,
    })
}
