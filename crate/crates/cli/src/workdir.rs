//! Work directory: artifact paths, an advisory lock and the run log.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::CliError;

const LOCK: &str = ".plc.lock";
pub const RUN_LOG: &str = "run.log";

/// An open work directory. Holding one keeps other runs out until dropped.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn open(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let lock = root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(CliError::Data(format!(
                    "{} is locked by another run (delete {} if that run is gone)",
                    root.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(CliError::io(&lock, e)),
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Creates `dir` (relative to the root) and returns its path.
    pub fn dir(&self, rel: &str) -> Result<PathBuf, CliError> {
        let p = self.path(rel);
        fs::create_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// Opens an upstream artifact, naming the command that produces it when missing.
    pub fn input(&self, rel: &str, producer: &str) -> Result<BufReader<File>, CliError> {
        let p = self.path(rel);
        match File::open(&p) {
            Ok(f) => Ok(BufReader::new(f)),
            Err(e) if e.kind() == ErrorKind::NotFound => Err(CliError::Data(format!(
                "missing {} (run `plc {producer}` first)",
                p.display()
            ))),
            Err(e) => Err(CliError::io(&p, e)),
        }
    }

    pub fn read_text(&self, rel: &str, producer: &str) -> Result<String, CliError> {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut self.input(rel, producer)?, &mut s).map_err(|e| CliError::io(&self.path(rel), e))?;
        Ok(s)
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))
    }

    /// Appends `timestamp TAB command TAB config=<hash> TAB metrics`.
    pub fn log(&self, command: &str, config_hash: &str, metrics: &str) -> Result<(), CliError> {
        let p = self.path(RUN_LOG);
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&p)
            .map_err(|e| CliError::io(&p, e))?;
        writeln!(f, "{ts}\t{command}\tconfig={config_hash}\t{metrics}").map_err(|e| CliError::io(&p, e))
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK));
    }
}
