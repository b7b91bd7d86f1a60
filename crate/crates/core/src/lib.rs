//! Churn classification with a self-attention feature extractor over entity-embedded
//! tabular features, plus the experiment machinery used to study it: SMOTE
//! rebalancing, rank AUC, balanced two-factor ANOVA, one-tailed Welch tests,
//! classic baselines and a seeded suite runner.
//!
//! The crate is organised bottom-up:
//!
//! * [`numcore`]: dense tensors, a reverse-mode tape and Adam.
//! * [`data`]: CSV ingestion, categorical encoding, descriptive statistics, splits.
//! * [`smote`]: minority oversampling on the training partition.
//! * [`model`]: the attention network, its training loop and checkpoints.
//! * [`metrics`]: AUC and the relative loss/AUC change rates.
//! * [`stats`]: ANOVA, Welch tests and the F / t tail probabilities.
//! * [`baselines`]: logistic regression, CART and a plain MLP.
//! * [`harness`]: suites, summaries and reports.
//!
//! Dense kernels are data-parallel through rayon when the `parallel` feature is on
//! (the default). Every kernel partitions work on fixed boundaries and reduces in a
//! fixed order, so [`Parallelism::Sequential`] and [`Parallelism::Parallel`] produce
//! bit-identical results.

pub mod baselines;
pub mod data;
mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod numcore;
mod par;
pub mod smote;
pub mod stats;

pub use error::{Error, Result};
pub use par::Parallelism;
