use std::path::Path;

use serde::Serialize;

use super::config::OutputFormat;
use super::run::{CellSummary, ResultTable};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "method", "N", "r", "trials", "fail_freq", "fail_ci_lo", "fail_ci_hi", "median_err", "q90_err", "median_gap", "runtime_ms",
];

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) if !x.is_nan() => x.to_string(),
        _ => "NA".into(),
    }
}

fn row(c: &CellSummary) -> [String; 11] {
    [
        c.method.as_str().to_string(),
        c.n.to_string(),
        c.r.to_string(),
        c.trials.to_string(),
        opt(c.fail_freq),
        opt(c.fail_ci_lo),
        opt(c.fail_ci_hi),
        opt(c.median_err),
        opt(c.q90_err),
        opt(c.median_gap),
        opt(c.runtime_ms),
    ]
}

pub fn to_csv_string(table: &ResultTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for c in &table.cells {
        w.write_record(row(c))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct JsonTable {
    schema_version: u32,
    columns: [&'static str; 11],
    rows: Vec<serde_json::Map<String, serde_json::Value>>,
}

/// Mirrors the CSV: one object per row with the same keys; `NA` becomes `null`.
pub fn to_json_string(table: &ResultTable) -> Result<String> {
    let rows = table
        .cells
        .iter()
        .map(|c| {
            let value = serde_json::to_value(c).expect("cell serializes");
            let serde_json::Value::Object(obj) = value else { unreachable!() };
            CSV_HEADER.iter().map(|k| (k.to_string(), obj.get(*k).cloned().unwrap_or(serde_json::Value::Null))).collect()
        })
        .collect();
    let out = JsonTable {
        schema_version: table.schema_version,
        columns: CSV_HEADER,
        rows,
    };
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

/// Writes `table` to `path` in `format`.
pub fn emit(table: &ResultTable, format: OutputFormat, path: &Path) -> Result<()> {
    if table.cells.is_empty() {
        return Err(Error::Empty("result table"));
    }
    let text = match format {
        OutputFormat::Csv => to_csv_string(table)?,
        OutputFormat::Json => to_json_string(table)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}
