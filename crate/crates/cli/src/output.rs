//! Result files: JSON documents with a `meta` block, CSV tables with `# ` header lines.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub command: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &'static str, config_sha256: &str, seed: u64) -> Self {
        Meta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_sha256.to_string(),
            seed,
        }
    }
}

#[derive(Serialize)]
struct Document<'a, T> {
    meta: &'a Meta,
    result: &'a T,
}

pub fn json<T: Serialize>(meta: &Meta, result: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Document { meta, result })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Float with 17 significant digits; NaN and infinities spelled out.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub struct CsvTable {
    columns: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &'static [&'static str]) -> Self {
        CsvTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, meta: &Meta) -> anyhow::Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "# command: {}", meta.command)?;
        writeln!(out, "# version: {}", meta.version)?;
        writeln!(out, "# config_sha256: {}", meta.config_sha256)?;
        writeln!(out, "# seed: {}", meta.seed)?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(self.columns)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer
            .into_inner()
            .map_err(|e| anyhow::anyhow!(e.to_string()))
    }
}

pub fn write(bytes: &[u8], path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
