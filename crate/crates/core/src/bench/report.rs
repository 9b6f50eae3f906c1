use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::run::{ExperimentReport, STRATIFIED_WINDOW};
use crate::error::{Error, Result};
use crate::metrics::METRICS_FILE;

pub const DRIFT_FILE: &str = "driftcurve.csv";
pub const MARKDOWN_FILE: &str = "report.md";

const MD_METRICS: [(&str, &str); 3] = [("f1_macro", "F1-macro"), ("f1_fraud", "F1-fraud"), ("auc", "AUC")];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::config("format", format!("unknown report format `{other}`"))),
        }
    }
}

fn dataset_label(report: &ExperimentReport, window: &str) -> String {
    if window == STRATIFIED_WINDOW {
        report.dataset.clone()
    } else {
        format!("{}[{window}]", report.dataset)
    }
}

pub fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("model,dataset,metric,mean,std,n_seeds\n");
    for cell in &report.cells {
        let dataset = dataset_label(report, &cell.window);
        for (metric, s) in cell.metrics.entries() {
            writeln!(out, "{},{dataset},{metric},{:.6},{:.6},{}", cell.model, s.mean, s.std, cell.metrics.n_runs).unwrap();
        }
    }
    out
}

pub fn drift_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("month,class,mean_amount,count\n");
    for row in &report.drift_curve {
        writeln!(out, "{},{},{:.6},{}", row.month, row.class, row.mean_amount, row.count).unwrap();
    }
    out
}

/// Models as rows, one column group per window; the strictly greatest mean
/// of each column is bold.
pub fn markdown(report: &ExperimentReport) -> String {
    let mut out = format!("# {} ({} protocol)\n\n", report.dataset, report.protocol.name());
    let mut header = String::from("| Model |");
    let mut rule = String::from("|---|");
    let mut columns = Vec::new();
    for window in &report.windows {
        for (key, title) in MD_METRICS {
            let label = if window == STRATIFIED_WINDOW {
                title.to_string()
            } else {
                format!("{title} (months {window})")
            };
            write!(header, " {label} |").unwrap();
            rule.push_str("---|");
            columns.push((window.as_str(), key));
        }
    }
    writeln!(out, "{header}\n{rule}").unwrap();

    let value = |model: &str, window: &str, key: &str| {
        report
            .cell(model, window)
            .and_then(|c| c.metrics.entries().into_iter().find(|(k, _)| *k == key).map(|e| e.1))
    };
    let best: Vec<Option<&str>> = columns
        .iter()
        .map(|&(window, key)| {
            let mut means: Vec<(&str, f64)> = report
                .models
                .iter()
                .filter_map(|m| value(m, window, key).map(|s| (m.as_str(), s.mean)))
                .collect();
            means.sort_by(|a, b| b.1.total_cmp(&a.1));
            match means.as_slice() {
                [first, second, ..] if first.1 > second.1 => Some(first.0),
                [only] => Some(only.0),
                _ => None,
            }
        })
        .collect();
    for model in &report.models {
        write!(out, "| {model} |").unwrap();
        for (col, &(window, key)) in columns.iter().enumerate() {
            match value(model, window, key) {
                Some(s) if best[col] == Some(model.as_str()) => write!(out, " **{:.3} ± {:.3}** |", s.mean, s.std),
                Some(s) => write!(out, " {:.3} ± {:.3} |", s.mean, s.std),
                None => write!(out, " n/a |"),
            }
            .unwrap();
        }
        out.push('\n');
    }
    let p = &report.provenance;
    let seeds: Vec<String> = p.seeds.iter().map(u64::to_string).collect();
    write!(
        out,
        "\nMean ± sample standard deviation over {} seeds ({}). Config sha256 `{}`, fraudbench {}.\n",
        p.seeds.len(),
        seeds.join(", "),
        p.config_sha256,
        p.crate_version
    )
    .unwrap();
    out
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `report.md`, or `metrics.csv` and `driftcurve.csv`, into `dir`.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match format {
        ReportFormat::Markdown => Ok(vec![write(dir.join(MARKDOWN_FILE), &markdown(report))?]),
        ReportFormat::Csv => Ok(vec![
            write(dir.join(METRICS_FILE), &metrics_csv(report))?,
            write(dir.join(DRIFT_FILE), &drift_csv(report))?,
        ]),
    }
}
