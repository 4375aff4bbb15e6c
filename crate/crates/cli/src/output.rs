use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The `#` comment line that starts every CSV file.
pub fn provenance_line(cfg: &ExperimentConfig) -> String {
    format!(
        "# cumsense {VERSION} experiment={} seed={} config_sha256={}\n",
        cfg.experiment.name(),
        cfg.seed,
        cfg.hash()
    )
}

/// CSV text with the provenance line and a header row from the field names.
pub fn csv_string<R: Serialize>(cfg: &ExperimentConfig, rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(provenance_line(cfg).into_bytes());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
}

/// CSV text for rows whose columns are only known at run time.
pub fn table_string(cfg: &ExperimentConfig, header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(provenance_line(cfg).into_bytes());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    seed: u64,
    config_sha256: String,
    files: &'a [String],
    config: &'a ExperimentConfig,
}

/// Output directory of one run; collects file names for the manifest.
pub struct RunOutput<'a> {
    dir: PathBuf,
    cfg: &'a ExperimentConfig,
    files: Vec<String>,
}

impl<'a> RunOutput<'a> {
    pub fn create(dir: &Path, cfg: &'a ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            cfg,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(path)
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let text = csv_string(self.cfg, rows)?;
        self.write(name, &text)
    }

    pub fn table(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf> {
        let text = table_string(self.cfg, header, rows)?;
        self.write(name, &text)
    }

    /// JSON has no comments, so the hash goes in a `config_sha256` field.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("config_sha256".into(), self.cfg.hash().into());
        }
        let text = serde_json::to_string_pretty(&v)? + "\n";
        self.write(name, &text)
    }

    /// Writes `manifest.json` listing every file of the run.
    pub fn finish(self) -> Result<PathBuf> {
        let manifest = Manifest {
            tool: "cumsense",
            version: VERSION,
            experiment: self.cfg.experiment.name(),
            seed: self.cfg.seed,
            config_sha256: self.cfg.hash(),
            files: &self.files,
            config: self.cfg,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
