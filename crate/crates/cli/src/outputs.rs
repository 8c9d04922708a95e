use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Files written by one command. Unless `commit` is called, dropping the
/// set removes them, so a failed command leaves no partial outputs.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes through a temporary file so an interrupted write never leaves
    /// a truncated file under the final name.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path.clone());
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}
