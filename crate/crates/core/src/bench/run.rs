use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{DatasetSource, ExperimentConfig, Protocol};
use crate::error::{Error, Result};
use crate::graphdata::{build_graph, export_dataset, extract_features, load_dataset, Dataset, WindowSpec};
use crate::metrics::{aggregate_runs, classification_metrics, evaluate_scores, AggregatedMetrics, MetricsRecord};
use crate::models::{predict_scores, save_model, train_model, train_with_validation, ModelSpec, TrainConfig, ValidationSet, MODEL_FILE};
use crate::simcore::{generate, monthly_means, AccountTable, MonthlyMean, TransactionLog};
use crate::splits::{stratified_split, temporal_windows, SplitAssignment, SplitTag, WindowData, SPLITS_FILE};

pub const REPORT_FILE: &str = "report.json";
/// Column label of the single stratified test part.
pub const STRATIFIED_WINDOW: &str = "test";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub record: MetricsRecord,
}

/// One (model, test window) cell of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub model: String,
    pub window: String,
    pub metrics: AggregatedMetrics,
    pub per_seed: Vec<SeedMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON form of the config (output path removed).
    pub config_sha256: String,
    pub crate_version: String,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub protocol: Protocol,
    pub models: Vec<String>,
    pub windows: Vec<String>,
    /// Model-major, window-minor.
    pub cells: Vec<ReportCell>,
    pub provenance: Provenance,
    /// Observed monthly means of the first seed's dataset.
    pub drift_curve: Vec<MonthlyMean>,
}

impl ExperimentReport {
    pub fn cell(&self, model: &str, window: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.model == model && c.window == window)
    }
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut canonical = config.clone();
    canonical.output = None;
    let text = serde_json::to_string(&canonical).expect("config serialises");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn annotate<'a>(model: &'a str, seed: u64, stage: &'static str) -> impl FnOnce(Error) -> Error + 'a {
    move |source| Error::Run {
        model: model.to_string(),
        seed,
        stage,
        source: Box::new(source),
    }
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Evaluates on the nodes tagged `Test`; AUC is left unset when the part
/// holds a single class.
fn score_part(labels: &[u8], scores: &[f64], split: &SplitAssignment) -> Result<MetricsRecord> {
    let nodes = split.nodes(SplitTag::Test);
    let y: Vec<u8> = nodes.iter().map(|&i| labels[i]).collect();
    let s: Vec<f64> = nodes.iter().map(|&i| scores[i]).collect();
    if y.contains(&0) && y.contains(&1) {
        evaluate_scores(&y, &s)
    } else {
        let predicted: Vec<u8> = s.iter().map(|&v| (v >= 0.5) as u8).collect();
        classification_metrics(&y, &predicted)
    }
}

struct SeedOutcome {
    /// Indexed `[model][window]`.
    records: Vec<Vec<MetricsRecord>>,
    log: TransactionLog,
}

/// Tagged windows of the temporal protocol: fit, optional validation, tests.
struct TemporalData {
    fit: WindowData,
    validation: Option<WindowData>,
    tests: Vec<WindowData>,
}

fn temporal_data(config: &ExperimentConfig, log: &TransactionLog, accounts: &AccountTable) -> Result<TemporalData> {
    let plan = &config.windows;
    let months = log.max_month().max(plan.tests[1].last_month);
    for w in [plan.train, plan.tests[0], plan.tests[1]] {
        w.validate(Some(months))?;
    }
    if config.train.patience.is_some() {
        let fit = WindowSpec::new(plan.train.first_month, plan.train.last_month - 1)?;
        let val = WindowSpec::new(plan.train.last_month, plan.train.last_month)?;
        let mut w = temporal_windows(log, accounts, fit, &[val, plan.tests[0], plan.tests[1]])?.into_iter();
        Ok(TemporalData {
            fit: w.next().unwrap(),
            validation: w.next(),
            tests: w.collect(),
        })
    } else {
        let mut w = temporal_windows(log, accounts, plan.train, &plan.tests)?.into_iter();
        Ok(TemporalData {
            fit: w.next().unwrap(),
            validation: None,
            tests: w.collect(),
        })
    }
}

fn run_seed(
    config: &ExperimentConfig,
    specs: &[ModelSpec],
    loaded: Option<&Dataset>,
    seed: u64,
    out: &Path,
) -> Result<SeedOutcome> {
    let dir = out.join(format!("seed-{seed}"));
    mkdir(&dir)?;
    let (log, accounts) = match loaded {
        Some(d) => (d.log.clone(), d.accounts.clone()),
        None => {
            let mut sim = config.sim_config()?.expect("generate source");
            sim.seed = seed;
            let (log, accounts) = generate(&sim).map_err(annotate("-", seed, "generate"))?;
            let horizon = WindowSpec::all(sim.months);
            let features = extract_features(&log, &accounts, horizon).map_err(annotate("-", seed, "features"))?;
            let dataset = Dataset {
                log,
                accounts,
                features: Some(features),
            };
            export_dataset(&dir.join("dataset"), &dataset).map_err(annotate("-", seed, "write"))?;
            (dataset.log, dataset.accounts)
        }
    };
    let train_cfg = TrainConfig {
        seed,
        ..config.train.clone()
    };

    let records: Vec<Vec<MetricsRecord>> = match config.protocol {
        Protocol::Stratified => {
            let horizon = WindowSpec::all(log.max_month());
            let graph = build_graph(&log, &accounts, horizon).map_err(annotate("-", seed, "graph"))?;
            let nodes = match loaded.and_then(|d| d.features.clone()) {
                Some(f) => f,
                None => extract_features(&log, &accounts, horizon).map_err(annotate("-", seed, "features"))?,
            };
            let split = stratified_split(&nodes.labels, config.ratios, seed).map_err(annotate("-", seed, "split"))?;
            split.write_csv(&dir.join(SPLITS_FILE)).map_err(annotate("-", seed, "write"))?;
            specs
                .par_iter()
                .map(|spec| {
                    let name = spec.kind.name();
                    let model = train_model(spec, &graph, &nodes, &split, &train_cfg).map_err(annotate(name, seed, "train"))?;
                    write_model(&dir, name, seed, &model)?;
                    let scores = predict_scores(&model, Some(&graph), &nodes).map_err(annotate(name, seed, "predict"))?;
                    Ok(vec![score_part(&nodes.labels, &scores, &split).map_err(annotate(name, seed, "evaluate"))?])
                })
                .collect::<Result<_>>()?
        }
        Protocol::Temporal => {
            let data = temporal_data(config, &log, &accounts).map_err(annotate("-", seed, "split"))?;
            let all = std::iter::once(&data.fit).chain(&data.validation).chain(&data.tests);
            for (i, w) in all.enumerate() {
                let role = match (i, &data.validation) {
                    (0, _) => "train",
                    (1, Some(_)) => "validation",
                    _ => "test",
                };
                let path = dir.join(format!("splits-{role}-{}.csv", w.window));
                w.split.write_csv(&path).map_err(annotate("-", seed, "write"))?;
            }
            let val_mask = data.validation.as_ref().map(|v| v.split.mask(SplitTag::Test));
            let fit_mask = data.fit.split.mask(SplitTag::Train);
            specs
                .par_iter()
                .map(|spec| {
                    let name = spec.kind.name();
                    let validation = data.validation.as_ref().zip(val_mask.as_deref()).map(|(v, mask)| ValidationSet {
                        graph: &v.graph,
                        nodes: &v.nodes,
                        mask,
                    });
                    let model = train_with_validation(spec, &data.fit.graph, &data.fit.nodes, &fit_mask, validation, &train_cfg)
                        .map_err(annotate(name, seed, "train"))?;
                    write_model(&dir, name, seed, &model)?;
                    data.tests
                        .iter()
                        .map(|t| {
                            let scores = predict_scores(&model, Some(&t.graph), &t.nodes).map_err(annotate(name, seed, "predict"))?;
                            score_part(&t.nodes.labels, &scores, &t.split).map_err(annotate(name, seed, "evaluate"))
                        })
                        .collect()
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(SeedOutcome { records, log })
}

fn write_model(dir: &Path, name: &str, seed: u64, model: &crate::models::TrainedModel) -> Result<()> {
    let model_dir = dir.join(name);
    mkdir(&model_dir).map_err(annotate(name, seed, "write"))?;
    save_model(&model_dir.join(MODEL_FILE), model).map_err(annotate(name, seed, "write"))
}

/// Runs every (seed, model) pair, aggregates over seeds and writes
/// `report.json` plus per-seed artefacts under `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    let specs = config.model_specs()?;
    let seeds = config.seeds.seeds();
    mkdir(out)?;
    let loaded = match &config.dataset {
        DatasetSource::Load(dir) => Some(load_dataset(dir)?),
        DatasetSource::Generate(_) => None,
    };
    if let (Some(d), Protocol::Temporal) = (&loaded, config.protocol) {
        if d.log.is_empty() {
            return Err(Error::EmptyLog);
        }
    }

    let outcomes: Vec<SeedOutcome> = seeds
        .par_iter()
        .map(|&seed| run_seed(config, &specs, loaded.as_ref(), seed, out))
        .collect::<Result<_>>()?;

    let windows: Vec<String> = match config.protocol {
        Protocol::Stratified => vec![STRATIFIED_WINDOW.to_string()],
        Protocol::Temporal => config.windows.tests.iter().map(|w| w.to_string()).collect(),
    };
    let mut cells = Vec::new();
    for (m, spec) in specs.iter().enumerate() {
        for (w, window) in windows.iter().enumerate() {
            let per_seed: Vec<SeedMetrics> = seeds
                .iter()
                .zip(&outcomes)
                .map(|(&seed, o)| SeedMetrics {
                    seed,
                    record: o.records[m][w].clone(),
                })
                .collect();
            let records: Vec<MetricsRecord> = per_seed.iter().map(|s| s.record.clone()).collect();
            cells.push(ReportCell {
                model: spec.kind.name().to_string(),
                window: window.clone(),
                metrics: aggregate_runs(&records)?,
                per_seed,
            });
        }
    }
    let drift_curve = if outcomes[0].log.is_empty() {
        Vec::new()
    } else {
        monthly_means(&outcomes[0].log)?
    };
    let report = ExperimentReport {
        dataset: config.name.clone(),
        protocol: config.protocol,
        models: specs.iter().map(|s| s.kind.name().to_string()).collect(),
        windows,
        cells,
        provenance: Provenance {
            config_sha256: config_hash(config),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
        },
        drift_curve,
    };
    save_report(out, &report)?;
    Ok(report)
}

pub fn save_report(dir: &Path, report: &ExperimentReport) -> Result<PathBuf> {
    let path = dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(report).expect("report serialises");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_report(dir: &Path) -> Result<ExperimentReport> {
    let path = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}
