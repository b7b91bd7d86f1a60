//! Command-line front end: data preparation, single training runs, suites and
//! reports.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 runtime
//! failure, 3 a band failed under `report --strict`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use hnnsae::data::{describe, load_csv, prepare, EncodedDataset};
use hnnsae::harness::{emit_report, run_data, run_suite, SuiteFile, SuiteName, SuiteResult, TrainFile};
use hnnsae::model::train;
use hnnsae::{Error, Result};

#[derive(Parser)]
#[command(name = "hnnsae", version, about = "Attention-based churn model and its experiment suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and encode a churn CSV into `<out>/dataset.json`.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Descriptive statistics of the numeric columns.
    Describe {
        #[arg(long)]
        input: PathBuf,
    },
    /// One training run described by a TOML file.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a suite and write its directory.
    Suite {
        #[arg(long)]
        name: SuiteName,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Concurrent runs (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Churn CSV or prepared dataset JSON. Falls back to the config file, then $HNNSAE_DATA.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Suite TOML overriding model and baseline settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Recompute summaries and report.md from a suite directory.
    Report {
        #[arg(long)]
        from: PathBuf,
        /// Exit with status 3 when any acceptance band fails.
        #[arg(long)]
        strict: bool,
    },
}

/// Raw CSV or a prepared dataset, by extension.
fn load_dataset(path: &Path) -> Result<EncodedDataset> {
    if path.extension().is_some_and(|e| e == "json") {
        EncodedDataset::load(path)
    } else {
        prepare(&load_csv(path)?)
    }
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: format!("cannot create directory: {e}"),
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: format!("cannot write: {e}"),
    })
}

fn bands_text(bands: &[hnnsae::harness::BandCheck]) -> String {
    let mut out = String::new();
    for b in bands {
        let _ = writeln!(out, "{} {}: {}", if b.passed { "PASS" } else { "FAIL" }, b.name, b.detail);
    }
    out
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Prepare { input, out } => {
            let ds = prepare(&load_csv(&input)?)?;
            mkdir(&out)?;
            let path = out.join("dataset.json");
            ds.save(&path)?;
            let (zeros, ones) = ds.class_counts();
            println!("{} rows ({zeros} stay, {ones} exit) -> {}", ds.len(), path.display());
            for (name, levels) in hnnsae::data::CATEGORICAL.iter().zip(&ds.meta().levels) {
                println!("  {name}: {}", levels.join(", "));
            }
        }
        Command::Describe { input } => {
            let started = Instant::now();
            let table = load_csv(&input)?;
            let stats = describe(&table.numeric_columns())?;
            print!("{}", stats.to_table());
            log::info!("described {} rows in {:.3}s", table.len(), started.elapsed().as_secs_f64());
        }
        Command::Train { config } => {
            let cfg = TrainFile::load(&config)?;
            cfg.model.validate()?;
            let data = load_dataset(&cfg.input)?;
            let smote = cfg.model.use_smote.then_some(cfg.model.smote_k);
            let (train_set, test_set) =
                run_data(&data, cfg.split_ratio, cfg.model.seed, smote, hnnsae::Parallelism::default())?;
            let (model, record) = train(&train_set, &test_set, &cfg.model)?;
            mkdir(&cfg.out)?;
            model.save(&cfg.out.join("model.json"))?;
            write(&cfg.out.join("run.json"), &record.to_json()?)?;
            let mut curve = String::from("epoch,train_loss,test_auc\n");
            for c in &record.checkpoints {
                let _ = writeln!(curve, "{},{},{}", c.epoch, c.train_loss, c.test_auc);
            }
            write(&cfg.out.join("curve.csv"), &curve)?;
            println!(
                "final test AUC {:.4}, train loss {:.3} after {} epochs -> {}",
                record.final_test_auc,
                record.final_train_loss.unwrap_or(f64::NAN),
                cfg.model.epochs,
                cfg.out.display()
            );
        }
        Command::Suite {
            name,
            runs,
            seed,
            out,
            workers,
            input,
            config,
        } => {
            let file = match &config {
                Some(p) => SuiteFile::load(p)?,
                None => SuiteFile::default(),
            };
            let mut spec = file.to_spec(Some(name))?;
            spec.runs = runs.unwrap_or(spec.runs);
            spec.base_seed = seed.unwrap_or(spec.base_seed);
            spec.workers = workers.unwrap_or(spec.workers);
            if spec.workers == 0 {
                spec.workers = std::thread::available_parallelism().map_or(1, |n| n.get());
            }
            spec.validate()?;
            let input = input
                .or(file.suite.input)
                .or_else(|| std::env::var_os("HNNSAE_DATA").map(PathBuf::from))
                .ok_or_else(|| Error::InvalidArgument("no dataset: pass --input or set HNNSAE_DATA".into()))?;
            let data = load_dataset(&input)?;
            let result = run_suite(&spec, &data)?;
            result.save(&out)?;
            let report = emit_report(&result, &out)?;
            print!("{}", bands_text(&report.bands));
            println!("{} runs ({} failed) -> {}", result.entries.len(), result.failures().len(), out.display());
        }
        Command::Report { from, strict } => {
            let result = SuiteResult::load(&from)?;
            let report = emit_report(&result, &from)?;
            print!("{}", bands_text(&report.bands));
            if strict && !report.all_passed() {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
