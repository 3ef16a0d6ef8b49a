use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{CliError, Format};
use crate::io::write_numeric_csv;

pub const MANIFEST_SCHEMA: &str = "run-manifest-v1";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    /// Command line without the program name and without `--out-dir`.
    pub args: Vec<String>,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("bad manifest: {e}")))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(CliError::Input(format!(
                "unexpected manifest schema {:?}, want {MANIFEST_SCHEMA:?}",
                m.schema
            )));
        }
        Ok(m)
    }
}

/// Numeric table rendered as CSV or JSON.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                write_numeric_csv(&self.columns.join(","), self.rows.iter().map(|r| &r[..]))
            }
            Format::Json => {
                let v = json!({ "columns": self.columns, "rows": self.rows });
                let mut s = serde_json::to_string_pretty(&v).expect("table json");
                s.push('\n');
                s
            }
        }
    }
}

/// Collects inputs, outputs and the resolved configuration of one command.
pub struct Context {
    pub out_dir: PathBuf,
    pub format: Format,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub config: serde_json::Map<String, Value>,
    pub seed: Option<u64>,
    pub stdout: String,
}

impl Context {
    pub fn new(out_dir: PathBuf, format: Format) -> Self {
        Self {
            out_dir,
            format,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: serde_json::Map::new(),
            seed: None,
            stdout: String::new(),
        }
    }

    /// Reads an input file and records its digest.
    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.note_input(&path.display().to_string(), &bytes);
        String::from_utf8(bytes)
            .map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))
    }

    pub fn note_input(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.push(InputDigest {
            path: label.to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn set_config(&mut self, key: &str, value: Value) {
        self.config.insert(key.to_string(), value);
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Input(format!("{}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `table` as `<stem>.csv` or `<stem>.json`.
    pub fn write_table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        let name = format!("{stem}.{}", self.format.extension());
        self.write(&name, &table.render(self.format))
    }

    pub fn say(&mut self, line: &str) {
        self.stdout.push_str(line);
        self.stdout.push('\n');
    }

    pub fn write_manifest(
        self,
        command: &str,
        args: Vec<String>,
        started: SystemTime,
        clock: Instant,
    ) -> Result<String, CliError> {
        let started_unix_s = started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: command.into(),
            args,
            config: Value::Object(self.config),
            inputs: self.inputs,
            outputs: self.outputs,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix_s,
            wall_clock_s: clock.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest json");
        text.push('\n');
        let path = self.out_dir.join(MANIFEST_FILE);
        std::fs::create_dir_all(&self.out_dir)
            .and_then(|_| std::fs::write(&path, text))
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(self.stdout)
    }
}
