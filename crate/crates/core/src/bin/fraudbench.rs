use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fraudbench::bench::{
    emit_report, load_report, run_experiment, DatasetSource, ExperimentConfig, ModelEntry, Protocol, ReportFormat,
    SeedList,
};
use fraudbench::graphdata::{export_dataset, extract_features, Dataset, WindowSpec};
use fraudbench::models::ModelKind;
use fraudbench::simcore::{generate, SimConfig};
use fraudbench::{Error, Result};

#[derive(Parser)]
#[command(name = "fraudbench", version, about = "Synthetic fraud-detection graph benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a transaction log and write it as a dataset directory.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and score one model on a dataset directory over several seeds.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        protocol: String,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an experiment's report.json as markdown or CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "md")]
        format: String,
    },
}

fn write_reports(report: &fraudbench::bench::ExperimentReport, dir: &Path) -> Result<()> {
    for format in [ReportFormat::Markdown, ReportFormat::Csv] {
        emit_report(report, format, dir)?;
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out } => {
            let sim = SimConfig::from_path(&config)?;
            let (log, accounts) = generate(&sim)?;
            let features = extract_features(&log, &accounts, WindowSpec::all(sim.months))?;
            export_dataset(
                &out,
                &Dataset {
                    log,
                    accounts,
                    features: Some(features),
                },
            )?;
            println!("wrote {}", out.display());
        }
        Command::Evaluate {
            data,
            model,
            protocol,
            seeds,
            out,
        } => {
            let kind = ModelKind::parse(&model)?;
            let config = ExperimentConfig {
                name: data.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into()),
                dataset: DatasetSource::Load(data),
                protocol: Protocol::parse(&protocol)?,
                models: vec![ModelEntry::Name(kind.name().to_string())],
                train: Default::default(),
                seeds: SeedList::Range { base: 0, count: seeds },
                ratios: fraudbench::bench::DEFAULT_RATIOS,
                windows: Default::default(),
                output: None,
            };
            let report = run_experiment(&config, &out)?;
            write_reports(&report, &out)?;
            print!("{}", fraudbench::bench::markdown(&report));
        }
        Command::Experiment { config, out } => {
            let config = ExperimentConfig::from_path(&config)?;
            let out = out
                .or_else(|| config.output.clone())
                .ok_or_else(|| Error::Config {
                    field: "output".into(),
                    reason: "give --out or set `output` in the config".into(),
                })?;
            let report = run_experiment(&config, &out)?;
            write_reports(&report, &out)?;
            print!("{}", fraudbench::bench::markdown(&report));
        }
        Command::Report { input, format } => {
            let format = ReportFormat::parse(&format)?;
            let report = load_report(&input)?;
            for path in emit_report(&report, format, &input)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
