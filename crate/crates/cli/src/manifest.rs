//! `manifest.json`: resolved configuration, timings and the list of written files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub solver: String,
    pub command: String,
    pub status: String,
    pub error: Option<String>,
    pub config: Option<RunConfig>,
    /// Phase name and wall-clock seconds, rounded to milliseconds.
    pub timings: Vec<(String, f64)>,
    pub outputs: Vec<String>,
    /// Scalar results worth keeping next to the files.
    pub summary: Vec<(String, f64)>,
    #[serde(skip)]
    dir: PathBuf,
}

impl RunManifest {
    /// Creates the output directory and writes the initial manifest.
    pub fn start(dir: &Path, command: &str, config: Option<RunConfig>) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let m = Self {
            solver: format!("pdpml {}", env!("CARGO_PKG_VERSION")),
            command: command.into(),
            status: "running".into(),
            error: None,
            config,
            timings: Vec::new(),
            outputs: Vec::new(),
            summary: Vec::new(),
            dir: dir.to_path_buf(),
        };
        m.write()?;
        Ok(m)
    }

    pub fn write(&self) -> anyhow::Result<()> {
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    /// Runs `f` as a named phase and records its duration.
    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> anyhow::Result<T>) -> anyhow::Result<T> {
        let start = Instant::now();
        let out = f(self);
        let secs = (start.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
        self.timings.push((name.into(), secs));
        self.write()?;
        out
    }

    /// Writes a file in the output directory and lists it.
    pub fn create(&mut self, name: &str, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> anyhow::Result<()>) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        f(&mut w)?;
        std::io::Write::flush(&mut w)?;
        self.outputs.push(name.into());
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: f64) {
        self.summary.push((key.into(), value));
    }

    pub fn finish(mut self, result: &anyhow::Result<()>) -> anyhow::Result<()> {
        match result {
            Ok(()) => self.status = "ok".into(),
            Err(e) => {
                self.status = "error".into();
                self.error = Some(format!("{e:#}"));
            }
        }
        self.write()
    }
}
