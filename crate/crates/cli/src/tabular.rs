//! CSV feature tables: a header row, `#` comment lines allowed.

use std::path::Path;

use crate::error::{CliError, Result};

pub struct Table {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Option<Vec<f64>>,
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn read_table(path: &Path, features: &[String], target: Option<&str>) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Data(format!(
                "{}: no column named '{name}' (columns: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let feature_cols = features
        .iter()
        .map(|f| column(f))
        .collect::<Result<Vec<_>>>()?;
    let target_col = target.map(column).transpose()?;

    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        let value = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::Data(format!(
                        "{} line {line}: '{raw}' in column '{}' is not a finite number",
                        path.display(),
                        &headers[c]
                    ))
                })
        };
        inputs.push(
            feature_cols
                .iter()
                .map(|&c| value(c))
                .collect::<Result<Vec<_>>>()?,
        );
        if let Some(c) = target_col {
            targets.push(value(c)?);
        }
    }
    if inputs.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Table {
        inputs,
        targets: target_col.map(|_| targets),
    })
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
