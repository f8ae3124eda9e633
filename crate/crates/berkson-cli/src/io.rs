//! Sample CSV ingestion and output-file helpers.

use std::path::Path;

use berkson::SampleMatrix;
use nalgebra::DMatrix;

use crate::CliError;

/// Reads a sample CSV with header `x1,…,xp` (or `wk,wb` for the NO₂
/// pipeline). Rejects ragged rows, non-numeric fields, and non-finite
/// values, citing the 1-based file line (header is line 1).
pub fn read_sample_csv(path: &Path) -> Result<SampleMatrix, CliError> {
    let records = read_float_csv(path)?;
    if records.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    let p = records[0].len();
    let data = DMatrix::from_fn(records.len(), p, |i, j| records[i][j]);
    SampleMatrix::new(data).map_err(CliError::Numeric)
}

/// Reads `(wk, wb)` concentration pairs for the NO₂ pipeline.
pub fn read_concentration_csv(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let records = read_float_csv(path)?;
    if records.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    if records[0].len() != 2 {
        return Err(CliError::Config(format!(
            "{}: expected two columns (wk, wb), got {}",
            path.display(),
            records[0].len()
        )));
    }
    Ok(records.into_iter().map(|r| (r[0], r[1])).collect())
}

fn read_float_csv(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: bad header: {e}", path.display())))?
        .clone();
    validate_header(&headers, path)?;

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record.map_err(|e| {
            CliError::Config(format!("{}: line {line}: {}", path.display(), ragged_message(&e)))
        })?;
        if record.len() != headers.len() {
            return Err(CliError::Config(format!(
                "{}: line {line}: expected {} fields, got {}",
                path.display(),
                headers.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                CliError::Config(format!(
                    "{}: line {line}: column '{}' has non-numeric value '{field}'",
                    path.display(),
                    headers.get(col).unwrap_or("?")
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::Config(format!(
                    "{}: line {line}: non-finite value '{field}'",
                    path.display()
                )));
            }
            row.push(value);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn validate_header(headers: &csv::StringRecord, path: &Path) -> Result<(), CliError> {
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    let xs: Vec<String> = (1..=names.len()).map(|i| format!("x{i}")).collect();
    if names == xs || names == ["wk", "wb"] {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{}: header must be x1..x{} or wk,wb; got {:?}",
            path.display(),
            names.len(),
            headers
        )))
    }
}

fn ragged_message(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("ragged row: expected {expected_len} fields, got {len}")
        }
        other => format!("{other:?}"),
    }
}

/// Writes to the path, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
