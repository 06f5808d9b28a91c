use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{hex, ExperimentConfig};
use crate::error::{Error, Result};
use crate::propagator::DensityMap;
use crate::CODE_VERSION;

/// Identification block written at the top of every artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub experiment: String,
    pub name: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub n_realizations: usize,
    pub code_version: String,
}

impl Provenance {
    pub fn of(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            experiment: cfg.kind.to_string(),
            name: cfg.stem().to_string(),
            config_hash: cfg.hash()?,
            master_seed: cfg.master_seed,
            n_realizations: cfg.n_realizations,
            code_version: CODE_VERSION.to_string(),
        })
    }

    /// `# key: value` lines.
    pub fn header(&self) -> String {
        format!(
            "# experiment: {}\n# name: {}\n# config_sha256: {}\n# master_seed: {}\n# n_realizations: {}\n# code_version: {}\n",
            self.experiment,
            self.name,
            self.config_hash,
            self.master_seed,
            self.n_realizations,
            self.code_version
        )
    }
}

/// Writes artifacts into one directory and records them for the manifest.
pub struct OutputWriter {
    dir: PathBuf,
    provenance: Provenance,
    files: Vec<String>,
}

impl OutputWriter {
    pub fn create(dir: &Path, provenance: Provenance) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn put(&mut self, file: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(file);
        std::fs::write(&path, bytes)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        if !self.files.iter().any(|f| f == file) {
            self.files.push(file.to_string());
        }
        Ok(path)
    }

    /// Adds a file written by someone else to the manifest.
    pub fn register(&mut self, file: &str) {
        if !self.files.iter().any(|f| f == file) {
            self.files.push(file.to_string());
        }
    }

    /// CSV with the provenance header, a column header line, and one line per row.
    pub fn write_csv(&mut self, file: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut s = self.provenance.header();
        s.push_str(&columns.join(","));
        s.push('\n');
        for row in rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.put(file, s.as_bytes())
    }

    /// Flat little-endian f64 array (row-major, time × position) plus a text
    /// sidecar describing its shape and axes.
    pub fn write_density(&mut self, stem: &str, map: &DensityMap) -> Result<()> {
        let bytes: Vec<u8> = map.values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let bin = format!("{stem}.bin");
        self.put(&bin, &bytes)?;
        let first = |v: &[f64]| v.first().copied().unwrap_or(f64::NAN);
        let last = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
        let mut side = self.provenance.header();
        let _ = write!(
            side,
            "data = {bin}\ndtype = f64le\nlayout = row-major (time, position)\nrows = {}\ncols = {}\nt_min = {}\nt_max = {}\nx_min = {}\nx_max = {}\n",
            map.rows(),
            map.cols(),
            first(&map.times),
            last(&map.times),
            first(&map.positions),
            last(&map.positions),
        );
        self.put(&format!("{stem}.txt"), side.as_bytes())?;
        Ok(())
    }

    /// Writes `manifest.txt` listing every artifact with its SHA-256 and size.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.files.sort();
        let mut s = self.provenance.header();
        s.push_str("# sha256  bytes  file\n");
        for f in &self.files {
            let path = self.dir.join(f);
            let bytes =
                std::fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            let _ = writeln!(s, "{}  {}  {f}", hex(&Sha256::digest(&bytes)), bytes.len());
        }
        let path = self.dir.join("manifest.txt");
        std::fs::write(&path, s).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }
}

/// Parses a density sidecar into `(key, value)` pairs, skipping comments.
pub fn read_sidecar(path: &Path) -> Result<Vec<(String, String)>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}
