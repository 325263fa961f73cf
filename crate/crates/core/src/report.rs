//! Deterministic output files and run reports.
//!
//! CSV files start with `#` comment lines naming the toolkit version and the
//! config digest. JSON files carry the same record as their first key,
//! `header`. All files are written to a temporary sibling and renamed.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// SHA-256 of the canonical JSON form of a validated config. Formatting,
/// comments and key order in the source file do not affect it.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    sha256_hex(&json)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub toolkit: String,
    pub version: String,
    pub config_digest: String,
    pub command: String,
    pub seed: u64,
}

impl Header {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            toolkit: "levirotor".into(),
            version: VERSION.into(),
            config_digest: config_digest(cfg),
            command: command.into(),
            seed: cfg.seed,
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# {} {}\n# config_digest sha256:{}\n# command {} seed {}\n",
            self.toolkit, self.version, self.config_digest, self.command, self.seed
        )
    }
}

/// Shortest round-trip representation, so reruns give identical bytes.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|x| fmt_f64(*x)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header) -> String {
        let mut out = header.comment_lines();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Parses a CSV written by [`CsvTable::render`] (or any headered numeric CSV
/// with `#` comments) into column names and rows of strings.
pub fn read_csv(text: &str) -> Result<CsvTable> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| crate::Error::Parse("CSV has no header row".into()))?
        .split(',')
        .map(|c| c.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if row.len() != columns.len() {
            return Err(crate::Error::Parse(format!(
                "CSV data row {}: {} fields, header has {}",
                i + 1,
                row.len(),
                columns.len()
            )));
        }
        rows.push(row);
    }
    Ok(CsvTable { columns, rows })
}

impl CsvTable {
    /// Numeric values of the named column.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| crate::Error::schema(name, "column not found"))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[k].parse::<f64>().map_err(|_| {
                    crate::Error::Parse(format!("row {}, column `{name}`: not a number", i + 1))
                })
            })
            .collect()
    }
}

pub fn render_json<T: Serialize>(header: &Header, body: &T) -> String {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        header: &'a Header,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Doc { header, body }).expect("output serializes");
    s.push('\n');
    s
}

/// Writes `contents` to a temporary file beside `path`, syncs it and renames
/// it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config_digest: String,
    pub command: String,
    pub seed: u64,
    pub outputs: Vec<OutputRecord>,
    pub timings: Vec<Timing>,
}

impl RunReport {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            version: VERSION.into(),
            config_digest: config_digest(cfg),
            command: command.into(),
            seed: cfg.seed,
            outputs: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// Writes a file atomically and records its hash.
    pub fn emit(&mut self, path: &Path, contents: &str) -> Result<()> {
        write_atomic(path, contents.as_bytes())?;
        self.outputs.push(OutputRecord {
            path: path.to_path_buf(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timings.push(Timing {
            stage: stage.into(),
            seconds,
        });
    }

    /// Digest over everything except wall-clock timings and output
    /// directories, so identical config and seed give identical digests.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for part in [
            &self.version,
            &self.config_digest,
            &self.command,
            &self.seed.to_string(),
        ] {
            h.update(part.as_bytes());
            h.update([0]);
        }
        for o in &self.outputs {
            let name = o
                .path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            h.update(name.as_bytes());
            h.update([0]);
            h.update(o.sha256.as_bytes());
            h.update([0]);
        }
        h.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}
