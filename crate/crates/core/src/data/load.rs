use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CSV_COLUMNS, NUMERIC, NUM_NUMERIC};
use crate::{Error, Result};

/// One customer row with the column types of the source table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerRecord {
    pub row_number: i64,
    pub customer_id: i64,
    pub surname: String,
    pub credit_score: i64,
    pub geography: String,
    pub gender: String,
    pub age: i64,
    pub tenure: i64,
    pub balance: f64,
    pub num_of_products: i64,
    pub has_cr_card: i64,
    pub is_active_member: i64,
    pub estimated_salary: f64,
    pub exited: u8,
}

impl CustomerRecord {
    /// Numeric features in [`NUMERIC`] order.
    pub fn numerics(&self) -> [f64; NUM_NUMERIC] {
        [
            self.credit_score as f64,
            self.age as f64,
            self.tenure as f64,
            self.balance,
            self.estimated_salary,
        ]
    }
}

/// A validated churn table.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<CustomerRecord>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Numeric feature columns, `[feature][row]`.
    pub fn numeric_columns(&self) -> Vec<(&'static str, Vec<f64>)> {
        (0..NUM_NUMERIC)
            .map(|j| (NUMERIC[j], self.rows.iter().map(|r| r.numerics()[j]).collect()))
            .collect()
    }

    /// Writes the table back out with the canonical header.
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.row_number,
                r.customer_id,
                r.surname,
                r.credit_score,
                r.geography,
                r.gender,
                r.age,
                r.tenure,
                r.balance,
                r.num_of_products,
                r.has_cr_card,
                r.is_active_member,
                r.estimated_salary,
                r.exited
            ));
        }
        out
    }
}

pub fn load_csv(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: format!("cannot open: {e}"),
    })?;
    parse_csv(file).map_err(|e| match e {
        Error::InvalidArgument(message) => Error::Data {
            path: path.to_path_buf(),
            message,
        },
        Error::Row { row, message } => Error::Data {
            path: path.to_path_buf(),
            message: format!("row {row}: {message}"),
        },
        other => other,
    })
}

/// Parses and validates churn CSV text. Column order is free; names are exact.
pub fn parse_csv<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::InvalidArgument(format!("unreadable header: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(Error::InvalidArgument("empty file".into()));
    }
    let pos: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let missing: Vec<&str> = CSV_COLUMNS.iter().copied().filter(|c| !pos.contains_key(c)).collect();
    if !missing.is_empty() {
        return Err(Error::InvalidArgument(format!("missing column(s): {}", missing.join(", "))));
    }
    let idx: Vec<usize> = CSV_COLUMNS.iter().map(|c| pos[c]).collect();

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        let cell = |c: usize| rec.get(idx[c]).unwrap_or("");
        let int = |c: usize| -> Result<i64> {
            let s = cell(c);
            s.parse::<i64>().or_else(|_| {
                // integral values written as floats, e.g. "1.0"
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.fract() == 0.0 && v.abs() < 9e15)
                    .map(|v| v as i64)
                    .ok_or_else(|| Error::Row {
                        row,
                        message: format!("column {}: cannot parse {s:?} as an integer", CSV_COLUMNS[c]),
                    })
            })
        };
        let float = |c: usize| -> Result<f64> {
            let s = cell(c);
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Row {
                row,
                message: format!("column {}: cannot parse {s:?} as a number", CSV_COLUMNS[c]),
            })
        };
        let text = |c: usize| -> Result<String> {
            let s = cell(c);
            if s.is_empty() && c != 2 {
                return Err(Error::Row {
                    row,
                    message: format!("column {}: empty value", CSV_COLUMNS[c]),
                });
            }
            Ok(s.to_string())
        };
        let exited = int(13)?;
        if exited != 0 && exited != 1 {
            return Err(Error::Row {
                row,
                message: format!("column Exited: {exited} is not 0 or 1"),
            });
        }
        rows.push(CustomerRecord {
            row_number: int(0)?,
            customer_id: int(1)?,
            surname: text(2)?,
            credit_score: int(3)?,
            geography: text(4)?,
            gender: text(5)?,
            age: int(6)?,
            tenure: int(7)?,
            balance: float(8)?,
            num_of_products: int(9)?,
            has_cr_card: int(10)?,
            is_active_member: int(11)?,
            estimated_salary: float(12)?,
            exited: exited as u8,
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty table: header but no data rows".into()));
    }
    Ok(RawTable {
        columns: headers.iter().map(str::to_string).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "RowNumber,CustomerId,Surname,CreditScore,Geography,Gender,Age,Tenure,Balance,NumOfProducts,HasCrCard,IsActiveMember,EstimatedSalary,Exited";

    #[test]
    fn parses_typed_rows() {
        let text = format!(
            "{HEADER}\n1,15634602,Hargrave,619,France,Female,42,2,0,1,1,1,101348.88,1\n2,15647311,Hill,608,Spain,Female,41,1,83807.86,1,0,1,112542.58,0\n"
        );
        let t = parse_csv(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.columns.len(), 14);
        assert_eq!(t.rows[1].balance, 83807.86);
        assert_eq!(t.rows[0].exited, 1);
        let again = parse_csv(t.to_csv().as_bytes()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn header_only_is_empty_table_error() {
        let err = parse_csv(format!("{HEADER}\n").as_bytes()).unwrap_err();
        assert!(err.to_string().contains("empty"), "{err}");
        assert!(parse_csv("".as_bytes()).is_err());
    }

    #[test]
    fn bad_label_names_the_row() {
        let text = format!(
            "{HEADER}\n1,1,A,600,France,Male,30,2,0,1,1,1,100.0,0\n2,2,B,600,France,Male,30,2,0,1,1,1,100.0,2\n"
        );
        match parse_csv(text.as_bytes()).unwrap_err() {
            Error::Row { row, message } => {
                assert_eq!(row, 2);
                assert!(message.contains("Exited"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_column_and_bad_cell() {
        let err = parse_csv("RowNumber,CustomerId\n1,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("Exited"));
        let text = format!("{HEADER}\n1,1,A,six hundred,France,Male,30,2,0,1,1,1,100.0,0\n");
        let err = parse_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 1, .. }), "{err}");
        assert!(err.to_string().contains("CreditScore"));
    }
}
