use std::fmt::Write as _;
use std::fs;
use std::hash::Hasher;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fnv::FnvHasher;
use tzsl_core::{Error, Result};

/// 64-bit FNV-1a of a file's bytes.
pub fn file_digest(path: &Path) -> Result<u64> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut h = FnvHasher::default();
    h.write(&bytes);
    Ok(h.finish())
}

/// Writes `bytes` to a temporary file in the target directory, then renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Collects files for one command and writes them together once the
/// command has succeeded, followed by the run manifest.
pub struct Run {
    command: &'static str,
    out_dir: PathBuf,
    started: Instant,
    settings: Vec<(String, String)>,
    inputs: Vec<PathBuf>,
    files: Vec<(String, Vec<u8>)>,
}

impl Run {
    pub fn new(command: &'static str, out_dir: &Path) -> Self {
        Self {
            command,
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
            settings: Vec::new(),
            inputs: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.to_string(), value.to_string()));
    }

    /// Adds every `key=value` line of `text` as a setting.
    pub fn settings_text(&mut self, text: &str) {
        for (k, v) in text.lines().filter_map(|l| l.split_once('=')) {
            self.setting(k, v);
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn finish(self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        let mut manifest = String::new();
        let _ = writeln!(manifest, "command={}", self.command);
        for (k, v) in &self.settings {
            let _ = writeln!(manifest, "config.{k}={v}");
        }
        for path in &self.inputs {
            let _ = writeln!(
                manifest,
                "input.{}={:016x}",
                path.display(),
                file_digest(path)?
            );
        }
        for (name, bytes) in &self.files {
            let path = self.out_dir.join(name);
            write_atomic(&path, bytes)?;
            let _ = writeln!(manifest, "output={}", path.display());
        }
        let _ = writeln!(
            manifest,
            "duration_ms={}",
            self.started.elapsed().as_millis()
        );
        write_atomic(&self.out_dir.join("manifest.txt"), manifest.as_bytes())
    }
}
