//! Output directory handling and provenance.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Embedded in every JSON payload. Deliberately free of timestamps so that
/// identical configs give byte-identical payloads.
#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: &'a ExperimentConfig,
}

impl<'a> Provenance<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        Self {
            tool: "skewspec",
            version: skewspec_core::VERSION,
            command: config.command.to_string(),
            config,
        }
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Per-size subdirectory `N{n}`.
    pub fn sub(&self, n: usize) -> CliResult<OutDir> {
        OutDir::create(&self.root.join(format!("N{n}")))
    }

    pub fn write_with<F>(&self, name: &str, f: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
            writeln!(w)
        })
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }
}
