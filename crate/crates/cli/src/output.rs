use crate::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A rendered result: a table for CSV, a document for JSON.
pub struct Payload {
    pub json: Value,
    /// Header and rows; `None` falls back to a flattened `key,value` listing.
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
}

impl Payload {
    pub fn document(json: impl Serialize) -> Result<Self, CliError> {
        Ok(Payload {
            json: serde_json::to_value(json)?,
            table: None,
        })
    }

    pub fn with_table(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        self.table = Some((header.iter().map(|s| s.to_string()).collect(), rows));
        self
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json)?;
                s.push('\n');
                Ok(s.into_bytes())
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                match &self.table {
                    Some((header, rows)) => {
                        w.write_record(header)?;
                        for r in rows {
                            w.write_record(r)?;
                        }
                    }
                    None => {
                        w.write_record(["key", "value"])?;
                        let mut flat = Vec::new();
                        flatten("", &self.json, &mut flat);
                        for (k, v) in flat {
                            w.write_record([k, v])?;
                        }
                    }
                }
                w.into_inner().map_err(|e| CliError::Io(e.into_error()))
            }
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Everything needed to rerun a command and get byte-identical output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Command line that produced the output, without the program name.
    pub args: Vec<String>,
    pub seed: u64,
    pub trials: usize,
    pub format: Format,
    /// Resolved inputs: job source, model, workers, grids.
    pub config: Value,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("manifest {}: {e}", path.display())))
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes the payload to `out` (plus its manifest) or to stdout.
pub fn emit(bytes: &[u8], out: Option<&Path>, manifest: &RunManifest) -> Result<(), CliError> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, bytes)?;
            let mut m = serde_json::to_string_pretty(manifest)?;
            m.push('\n');
            std::fs::write(manifest_path(p), m)?;
        }
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
        }
    }
    Ok(())
}
