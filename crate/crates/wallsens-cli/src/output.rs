//! Artifact writers: fixed-header CSV files, the manifest and the summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use wallsens::FieldHistory;

use crate::config::RunConfig;
use crate::CliError;

/// Output directory that remembers what was written to it.
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `x_star,t_star,<value>` rows of a recorded field.
    pub fn field(&mut self, name: &str, value: &str, h: &FieldHistory) -> Result<(), CliError> {
        let dx = 1.0 / (h.nx - 1) as f64;
        let rows = (0..h.levels()).flat_map(|i| {
            (0..h.nx).map(move |j| vec![num(dx * j as f64), num(h.time(i)), num(h.get(i, j))])
        });
        self.csv(name, &["x_star", "t_star", value], rows)
    }

    /// `t,value` rows of a uniformly sampled series.
    pub fn series(&mut self, name: &str, dt: f64, values: &[f64]) -> Result<(), CliError> {
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![num(dt * i as f64), num(*v)]);
        self.csv(name, &["t", "value"], rows)
    }

    /// `param,metric,value` rows.
    pub fn table(&mut self, name: &str, rows: &[(String, String, f64)]) -> Result<(), CliError> {
        self.csv(
            name,
            &["param", "metric", "value"],
            rows.iter()
                .map(|(p, m, v)| vec![p.clone(), m.clone(), num(*v)]),
        )
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(wallsens::Error::from)?;
        fs::write(self.path(name), text + "\n")?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.path(name), text)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Manifest: tool versions, seed, resolved config, and a hash over the
/// config and every input file.
pub fn manifest(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<Value, CliError> {
    let config = serde_json::to_value(cfg).map_err(wallsens::Error::from)?;
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&config).map_err(wallsens::Error::from)?);
    let mut files = Vec::new();
    for p in inputs {
        let bytes = fs::read(p)?;
        hasher.update(&bytes);
        files.push(json!({ "path": p.display().to_string(), "sha256": sha256_hex(&bytes) }));
    }
    Ok(json!({
        "tool": "wallsens",
        "cli_version": env!("CARGO_PKG_VERSION"),
        "library_version": wallsens::VERSION,
        "task": cfg.task,
        "seed": cfg.seed,
        "inputs_sha256": format!("{:x}", hasher.finalize()),
        "input_files": files,
        "config": config,
    }))
}
