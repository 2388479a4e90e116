use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

use super::regression::{Loss, RawRegression, RegressionProblem};

/// Reads a numeric CSV into a raw design matrix and label vector.
///
/// A first row containing any non-numeric cell is treated as a header;
/// lines starting with `#` are skipped.
/// Rows are 1-based line numbers, columns 0-based indices.
pub fn read_csv(path: impl AsRef<Path>, label_column: usize) -> Result<RawRegression> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        if rows.is_empty() && width.is_none() && parsed.iter().any(|c| c.is_err()) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: line,
                column: record.len().min(expected),
                reason: format!("expected {expected} columns, found {}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(expected);
        for (column, (cell, value)) in record.iter().zip(parsed).enumerate() {
            match value {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: line,
                        column,
                        reason: format!("`{cell}` is not a finite number"),
                    })
                }
            }
        }
        rows.push(row);
    }

    let width = match (rows.is_empty(), width) {
        (true, _) | (_, None) => {
            return Err(Error::EmptyData {
                path: path.to_path_buf(),
                reason: "no data rows".into(),
            })
        }
        (false, Some(w)) => w,
    };
    if label_column >= width {
        return Err(Error::invalid(
            "label_column",
            format!("{label_column} is out of range for {width} columns"),
        ));
    }
    if width < 2 {
        return Err(Error::EmptyData {
            path: path.to_path_buf(),
            reason: "need at least one feature column besides the label".into(),
        });
    }
    let n_rows = rows.len();
    let mut a = Vec::with_capacity(n_rows * (width - 1));
    let mut b = Vec::with_capacity(n_rows);
    for row in rows {
        for (j, v) in row.into_iter().enumerate() {
            if j == label_column {
                b.push(v);
            } else {
                a.push(v);
            }
        }
    }
    Ok(RawRegression {
        a: DenseMatrix::from_row_major(n_rows, width - 1, a)?,
        b: DenseVector::new(b)?,
        x_star: None,
    })
}

/// [`read_csv`] followed by centering and unit-column normalization.
pub fn load_csv(path: impl AsRef<Path>, label_column: usize, loss: Loss, lambda: f64) -> Result<RegressionProblem> {
    let raw = read_csv(path, label_column)?;
    RegressionProblem::from_raw(raw, loss, lambda, 0)
}
