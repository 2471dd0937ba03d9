//! Output files and the metadata embedded in each of them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::HarnessError;

/// Provenance of one run: enough to reproduce every output byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Resolved parameters, defaults filled in.
    pub parameters: Value,
}

impl Metadata {
    pub fn new(command: &str, seed: u64, raw_config: &[u8], parameters: Value) -> Self {
        Self {
            tool: format!("netgame {}", env!("CARGO_PKG_VERSION")),
            command: command.to_owned(),
            seed,
            config_sha256: hex::encode(Sha256::digest(raw_config)),
            parameters,
        }
    }

    /// `# key: value` lines for the top of a CSV file.
    pub fn comment_lines(&self) -> String {
        format!(
            "# {}\n# command: {}\n# seed: {}\n# config_sha256: {}\n# parameters: {}\n",
            self.tool, self.command, self.seed, self.config_sha256, self.parameters
        )
    }

    pub fn to_json(&self) -> Value {
        json!(self)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)
        .map_err(|e| HarnessError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Runtime(format!("writing {}: {e}", path.display()))
}

/// CSV file whose first lines are the metadata comments, followed by `header`.
pub struct CsvOutput {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOutput {
    pub fn create(path: PathBuf, meta: &Metadata, header: &[&str]) -> Result<Self, HarnessError> {
        let mut file = create(&path)?;
        file.write_all(meta.comment_lines().as_bytes())
            .map_err(io_error(&path))?;
        let mut writer = csv::Writer::from_writer(file);
        writer
            .write_record(header)
            .map_err(|e| HarnessError::Runtime(format!("writing {}: {e}", path.display())))?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), HarnessError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| HarnessError::Runtime(format!("writing {}: {e}", self.path.display())))
    }

    pub fn finish(mut self) -> Result<PathBuf, HarnessError> {
        self.writer.flush().map_err(io_error(&self.path))?;
        Ok(self.path)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(io_error(path))?;
    f.flush().map_err(io_error(path))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write_text(path, &text)
}

/// Shortest round-trip representation; identical across runs and platforms.
pub fn num(v: f64) -> String {
    format!("{v}")
}
