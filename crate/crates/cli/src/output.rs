//! Output directory bookkeeping and the run manifest.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes files under one root and remembers what was written.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<(String, &'static str)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8], format: &'static str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push((rel.to_string(), format));
        Ok(())
    }

    pub fn write_text(&mut self, rel: &str, text: &str, format: &'static str) -> Result<()> {
        self.write(rel, text.as_bytes(), format)
    }

    /// Writes `manifest.txt` with the output list and wall time appended.
    pub fn finish(self, mut manifest: Manifest) -> Result<PathBuf> {
        manifest.push("outputs.count", self.written.len());
        for (i, (path, format)) in self.written.iter().enumerate() {
            manifest.push(&format!("output.{i}.path"), path);
            manifest.push(&format!("output.{i}.format"), format);
        }
        manifest.push(
            "wall_seconds",
            format!("{:.3}", manifest.started.elapsed().as_secs_f64()),
        );
        let path = self.root.join("manifest.txt");
        fs::write(&path, manifest.render())
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Ordered `key=value` lines.
#[derive(Debug)]
pub struct Manifest {
    entries: Vec<(String, String)>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &str, started: Instant) -> Self {
        let mut m = Manifest {
            entries: Vec::new(),
            started,
        };
        m.push("command", command);
        m.push("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        let v = value.to_string().replace('\n', " ");
        self.entries.push((key.to_string(), v));
    }

    pub fn push_num(&mut self, key: &str, value: f64) {
        self.push(key, num(value));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}
