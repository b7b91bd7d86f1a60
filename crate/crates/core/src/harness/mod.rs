//! Seeded experiment suites and their reports.
//!
//! A suite directory holds:
//!
//! * `suite.json`: the [`SuiteSpec`] plus provenance (dataset digest, start time).
//! * `runs/<cell>__run<i>.json`: one [`RunEntry`] per run, the only source of
//!   every summary number.
//! * `summary/*.csv`: tables recomputed from the run files (`runs.csv` always,
//!   then the suite's own tables, e.g. `table3.csv` or `anova_test_auc_500.csv`).
//! * `curves/<cell>__run<i>.csv`: `epoch,train_loss,test_auc` per checkpoint.
//! * `report.md`: the tables plus acceptance-band verdicts.

mod config;
mod report;
mod run;
mod spec;

pub use config::{SuiteFile, TrainFile};
pub use report::{acceptance_bands, emit_report, summary_tables, BandCheck, Report, Summary, Table};
pub use run::{dataset_digest, run_data, run_suite, Provenance, RunEntry, SuiteResult};
pub use spec::{run_seed, Cell, SuiteName, SuiteSpec, HEAD_GRID};
