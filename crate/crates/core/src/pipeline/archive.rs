use std::fs;
use std::path::{Path, PathBuf};

use super::PipelineError;

/// Per-program archive rooted at `<run>/<program_id>`; `iterK` holds
/// everything produced by query K (iter0 is the preprocessed unit).
#[derive(Debug, Clone)]
pub struct Archive {
    root: PathBuf,
}

impl Archive {
    pub fn new(run_dir: &Path, program_id: &str) -> Self {
        Archive {
            root: run_dir.join(program_id),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn iter_dir(&self, k: u32) -> PathBuf {
        self.root.join(format!("iter{k}"))
    }

    pub fn work_dir(&self) -> PathBuf {
        self.root.join("work")
    }

    pub fn write(&self, k: u32, name: &str, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
        let dir = self.iter_dir(k);
        let path = dir.join(name);
        fs::create_dir_all(&dir)
            .and_then(|_| fs::write(&path, contents))
            .map_err(|source| PipelineError::Archive { path, source })
    }
}
