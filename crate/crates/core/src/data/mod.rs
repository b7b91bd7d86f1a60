//! Bank-churn table ingestion and feature encoding.
//!
//! The ten modelling features are five categoricals carried as level indices
//! and five numerics that are z-scored with training-partition statistics.

mod describe;
mod encode;
mod load;
mod split;
mod synthetic;

pub use describe::{describe, describe_column, ColumnStats, DescriptiveStats};
pub use encode::{prepare, EncodedDataset, EncoderMeta, Scaler, DATASET_FORMAT, DATASET_VERSION};
pub use load::{load_csv, parse_csv, CustomerRecord, RawTable};
pub use split::split;
pub use synthetic::synthetic_table;

/// Header names expected in the input CSV.
pub const CSV_COLUMNS: [&str; 14] = [
    "RowNumber",
    "CustomerId",
    "Surname",
    "CreditScore",
    "Geography",
    "Gender",
    "Age",
    "Tenure",
    "Balance",
    "NumOfProducts",
    "HasCrCard",
    "IsActiveMember",
    "EstimatedSalary",
    "Exited",
];

/// Categorical features in token order.
pub const CATEGORICAL: [&str; NUM_CATEGORICAL] =
    ["Geography", "Gender", "NumOfProducts", "HasCrCard", "IsActiveMember"];

/// Numeric features in token order.
pub const NUMERIC: [&str; NUM_NUMERIC] = ["CreditScore", "Age", "Tenure", "Balance", "EstimatedSalary"];

pub const NUM_CATEGORICAL: usize = 5;
pub const NUM_NUMERIC: usize = 5;
pub const NUM_FEATURES: usize = NUM_CATEGORICAL + NUM_NUMERIC;
