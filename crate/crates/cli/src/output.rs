//! CSV and JSON emission.

use std::fs;
use std::path::Path;

use serde::Serialize;

use kawahara_core::diagnostics::DiagnosticsRecord;

use crate::error::CliError;

/// Shortest round-trip decimal of `v`.
pub fn fmt_f64(v: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(v).to_string()
}

/// Quote a CSV field when it holds a comma, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn series_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 200 + 64);
    out.push_str(DiagnosticsRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.csv_fields().iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
