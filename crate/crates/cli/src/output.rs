//! Artifact writers. Every file carries the hash of the configuration that produced it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;
use waterwave::diagnostics::{write_checkpoint, RunRecord};
use waterwave::evolution::WaveState;

/// Columns of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn from_record(record: &RunRecord) -> Self {
        Table {
            columns: RunRecord::CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
            rows: record.csv_rows(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Appends a numeric column. Rows beyond `values` get an empty cell.
    pub fn add_column(&mut self, name: &str, values: Vec<f64>) {
        self.columns.push(name.to_string());
        for (i, row) in self.rows.iter_mut().enumerate() {
            row.push(values.get(i).map(|v| format!("{v:e}")).unwrap_or_default());
        }
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut s = String::new();
        writeln!(s, "# config_hash = {config_hash}").unwrap();
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            writeln!(s, "{}", r.join(",")).unwrap();
        }
        s
    }
}

pub fn write_csv(dir: &Path, prefix: &str, config_hash: &str, table: &Table) -> std::io::Result<PathBuf> {
    let path = dir.join(format!("{prefix}.csv"));
    std::fs::write(&path, table.to_csv(config_hash))?;
    Ok(path)
}

pub fn write_json(dir: &Path, prefix: &str, value: &Value) -> std::io::Result<PathBuf> {
    let path = dir.join(format!("{prefix}.json"));
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn write_checkpoint_file(
    dir: &Path,
    prefix: &str,
    state: &WaveState,
    config_hash: &str,
    data_size: Option<f64>,
) -> std::io::Result<PathBuf> {
    let path = dir.join(format!("{prefix}.checkpoint"));
    std::fs::write(&path, write_checkpoint(state, config_hash, data_size))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_hash_header_and_padded_column() {
        let mut t = Table::new(&["a"]);
        t.push(vec!["1".into()]);
        t.push(vec!["2".into()]);
        t.add_column("b", vec![0.5]);
        assert_eq!(t.to_csv("abc"), "# config_hash = abc\na,b\n1,5e-1\n2,\n");
    }
}
