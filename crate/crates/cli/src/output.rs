//! Output files and their provenance sidecars.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ep3_core::Params;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Version recorded in every sidecar: `git describe` output when provided
/// at build time, the package version otherwise.
pub fn version() -> &'static str {
    option_env!("EP3_GIT_DESCRIBE").unwrap_or(concat!("ep3-cli ", env!("CARGO_PKG_VERSION")))
}

/// Collects the files of one command and writes its sidecar last.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| {
            CliError::Config(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `name` through `fill`, buffering and flushing.
    pub fn write<F>(&mut self, name: &str, fill: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        let path = self.root.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        fill(&mut out)?;
        out.flush()?;
        log::info!("wrote {}", path.display());
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<V: Serialize + ?Sized>(
        &mut self,
        name: &str,
        value: &V,
    ) -> CliResult<PathBuf> {
        self.write(name, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            writeln!(out)?;
            Ok(())
        })
    }

    /// Writes `<command>.meta.json` listing everything written before it.
    pub fn finish<N: Serialize>(
        mut self,
        command: &str,
        run: &RunRecord<'_>,
        notes: &N,
    ) -> CliResult<PathBuf> {
        let meta = Meta {
            command,
            version: version(),
            seed: run.seed,
            params: run.params,
            source_params: run.source_params,
            config: run.config,
            outputs: self.written.clone(),
            notes,
        };
        self.write_json(&format!("{command}.meta.json"), &meta)
    }
}

/// Resolved inputs of a run.
pub struct RunRecord<'a> {
    pub seed: u64,
    /// Parameters in gamma units, as used.
    pub params: &'a Params,
    /// Parameters as read, before unit conversion.
    pub source_params: &'a Params,
    pub config: &'a RunConfig,
}

#[derive(Serialize)]
struct Meta<'a, N> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    params: &'a Params,
    source_params: &'a Params,
    config: &'a RunConfig,
    outputs: Vec<String>,
    notes: &'a N,
}
