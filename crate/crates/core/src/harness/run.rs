use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spec::{run_seed, Cell, SuiteSpec};
use crate::baselines::fit_baseline;
use crate::data::{split, EncodedDataset};
use crate::model::{train_with, RunConfig, RunRecord};
use crate::numcore::derive_seed;
use crate::smote::{oversample, SmoteConfig};
use crate::{Error, Parallelism, Result};

const SMOTE_STREAM: u64 = 0x5307E;

/// One run of one cell. Exactly one of `record` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub cell: String,
    pub run_index: usize,
    pub seed: u64,
    pub config: RunConfig,
    pub record: Option<RunRecord>,
    pub error: Option<String>,
}

impl RunEntry {
    /// SHA-256 of the run's configuration as JSON.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(&self.config).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_sha256: String,
    pub dataset_rows: usize,
    pub started_unix_secs: u64,
    pub version: String,
}

/// A finished suite: its spec, where the data came from, and every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub spec: SuiteSpec,
    pub provenance: Provenance,
    /// Sorted by cell (spec order), then run index.
    pub entries: Vec<RunEntry>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    spec: SuiteSpec,
    provenance: Provenance,
}

const MANIFEST_FORMAT: &str = "hnnsae-suite";

/// Train/test partitions for one run: split by `seed`, then SMOTE on the
/// training side only when asked.
pub fn run_data(
    data: &EncodedDataset,
    ratio: f64,
    seed: u64,
    smote_k: Option<usize>,
    par: Parallelism,
) -> Result<(EncodedDataset, EncodedDataset)> {
    let (train, test) = split(data, ratio, seed)?;
    let train = match smote_k {
        Some(k) => oversample(
            &train,
            &SmoteConfig {
                k_neighbors: k,
                seed: derive_seed(seed, SMOTE_STREAM),
                parallelism: par,
            },
        )?,
        None => train,
    };
    Ok((train, test))
}

fn execute(spec: &SuiteSpec, cell: &Cell, run_index: usize, data: &EncodedDataset, par: Parallelism) -> RunEntry {
    let seed = run_seed(spec.base_seed, run_index);
    let config = cell.run_config(spec.base_seed, run_index);
    let smote = cell.uses_smote().then(|| cell.smote_k());
    let outcome = run_data(data, spec.split_ratio, seed, smote, par).and_then(|(train, test)| match &config {
        RunConfig::Hnnsae(c) => train_with(&train, &test, c, par).map(|(_, r)| r),
        RunConfig::Baseline(c) => fit_baseline(&train, &test, c, par).map(|(_, r)| r),
    });
    let (record, error) = match outcome {
        Ok(r) => {
            log::info!("{} run {run_index}: test AUC {:.4}", cell.id, r.final_test_auc);
            (Some(r), None)
        }
        Err(e) => {
            log::warn!("{} run {run_index} failed: {e}", cell.id);
            (None, Some(e.to_string()))
        }
    };
    RunEntry {
        cell: cell.id.clone(),
        run_index,
        seed,
        config,
        record,
        error,
    }
}

pub fn dataset_digest(data: &EncodedDataset) -> Result<String> {
    Ok(hex::encode(Sha256::digest(data.to_json()?.as_bytes())))
}

/// Runs every cell `spec.runs` times. A failed run is recorded and the suite
/// carries on; the returned entries are ordered by cell then run index no
/// matter how many workers ran them.
pub fn run_suite(spec: &SuiteSpec, data: &EncodedDataset) -> Result<SuiteResult> {
    spec.validate()?;
    if data.meta().scaler.is_some() {
        return Err(Error::InvalidArgument("suite input must be the unstandardized prepared dataset".into()));
    }
    let provenance = Provenance {
        dataset_sha256: dataset_digest(data)?,
        dataset_rows: data.len(),
        started_unix_secs: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let cells = spec.cells();
    let jobs: Vec<(&Cell, usize)> = cells.iter().flat_map(|c| (0..spec.runs).map(move |r| (c, r))).collect();
    log::info!("{}: {} cells x {} runs", spec.suite, cells.len(), spec.runs);
    let entries = schedule(spec, &jobs, data)?;
    Ok(SuiteResult {
        spec: spec.clone(),
        provenance,
        entries,
    })
}

#[cfg(feature = "parallel")]
fn schedule(spec: &SuiteSpec, jobs: &[(&Cell, usize)], data: &EncodedDataset) -> Result<Vec<RunEntry>> {
    use rayon::prelude::*;
    if spec.workers == 1 {
        return Ok(jobs.iter().map(|&(c, r)| execute(spec, c, r, data, spec.parallelism)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {} workers: {e}", spec.workers)))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| execute(spec, c, r, data, spec.parallelism))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn schedule(spec: &SuiteSpec, jobs: &[(&Cell, usize)], data: &EncodedDataset) -> Result<Vec<RunEntry>> {
    Ok(jobs.iter().map(|&(c, r)| execute(spec, c, r, data, spec.parallelism)).collect())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read(path: &Path) -> Result<String> {
    Error::read_input(path)
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

pub(crate) fn run_file_stem(cell: &str, run_index: usize) -> String {
    format!("{cell}__run{run_index}")
}

impl SuiteResult {
    /// Writes `suite.json` and one `runs/<cell>__run<i>.json` per run.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let runs = dir.join("runs");
        create_dir(&runs)?;
        let manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            version: 1,
            spec: self.spec.clone(),
            provenance: self.provenance.clone(),
        };
        write(&dir.join("suite.json"), &serde_json::to_string_pretty(&manifest)?)?;
        for e in &self.entries {
            let path = runs.join(format!("{}.json", run_file_stem(&e.cell, e.run_index)));
            write(&path, &serde_json::to_string_pretty(e)?)?;
        }
        Ok(())
    }

    /// Reads a directory written by [`SuiteResult::save`]. Every expected run
    /// file must be present.
    pub fn load(dir: &Path) -> Result<SuiteResult> {
        let manifest: Manifest = serde_json::from_str(&read(&dir.join("suite.json"))?)?;
        if manifest.format != MANIFEST_FORMAT || manifest.version != 1 {
            return Err(Error::Serde(format!("{} is not a suite directory", dir.display())));
        }
        let mut entries = Vec::new();
        for cell in manifest.spec.cells() {
            for r in 0..manifest.spec.runs {
                let path = dir.join("runs").join(format!("{}.json", run_file_stem(&cell.id, r)));
                let e: RunEntry = serde_json::from_str(&read(&path)?)?;
                if e.cell != cell.id || e.run_index != r {
                    return Err(Error::Serde(format!("{} does not describe {} run {r}", path.display(), cell.id)));
                }
                entries.push(e);
            }
        }
        Ok(SuiteResult {
            spec: manifest.spec,
            provenance: manifest.provenance,
            entries,
        })
    }

    /// Completed records of one cell in run order.
    pub fn records(&self, cell: &str) -> Vec<&RunRecord> {
        self.entries
            .iter()
            .filter(|e| e.cell == cell)
            .filter_map(|e| e.record.as_ref())
            .collect()
    }

    pub fn failures(&self) -> Vec<&RunEntry> {
        self.entries.iter().filter(|e| e.record.is_none()).collect()
    }
}
