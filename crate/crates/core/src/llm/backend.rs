use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::ChatMessage;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("completion backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("no fixture response for {program_id} query {ordinal}")]
    FixtureExhausted { program_id: String, ordinal: u32 },

    #[error("request exceeds the model context: {0}")]
    ContextOverflow(String),

    #[error("fixture I/O on {path}: {source}")]
    FixtureIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Identifies one query: the program and the 1-based query ordinal within
/// its refinement run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryKey {
    pub program_id: String,
    pub ordinal: u32,
}

impl QueryKey {
    pub fn new(program_id: impl Into<String>, ordinal: u32) -> Self {
        QueryKey {
            program_id: program_id.into(),
            ordinal,
        }
    }
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, key: &QueryKey, messages: &[ChatMessage]) -> Result<String, BackendError>;
}

fn fixture_path(dir: &Path, key: &QueryKey) -> PathBuf {
    dir.join(&key.program_id).join(format!("{}.txt", key.ordinal))
}

/// Serves recorded responses from `<dir>/<program_id>/<ordinal>.txt`.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayBackend { dir: dir.into() }
    }
}

impl CompletionBackend for ReplayBackend {
    fn complete(&self, key: &QueryKey, _messages: &[ChatMessage]) -> Result<String, BackendError> {
        let path = fixture_path(&self.dir, key);
        match fs::read(&path) {
            Ok(bytes) => Ok(String::from_utf8_lossy(&bytes).into_owned()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(BackendError::FixtureExhausted {
                program_id: key.program_id.clone(),
                ordinal: key.ordinal,
            }),
            Err(source) => Err(BackendError::FixtureIo { path, source }),
        }
    }
}

/// Forwards to another backend and saves every response in the replay layout.
pub struct RecordingBackend<B> {
    inner: B,
    dir: PathBuf,
}

impl<B: CompletionBackend> RecordingBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> Self {
        RecordingBackend { inner, dir: dir.into() }
    }
}

impl<B: CompletionBackend> CompletionBackend for RecordingBackend<B> {
    fn complete(&self, key: &QueryKey, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let text = self.inner.complete(key, messages)?;
        let path = fixture_path(&self.dir, key);
        let io_err = |source| BackendError::FixtureIo {
            path: path.clone(),
            source,
        };
        fs::create_dir_all(path.parent().expect("fixture path has a parent")).map_err(io_err)?;
        fs::write(&path, &text).map_err(io_err)?;
        Ok(text)
    }
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for Box<T> {
    fn complete(&self, key: &QueryKey, messages: &[ChatMessage]) -> Result<String, BackendError> {
        (**self).complete(key, messages)
    }
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for &T {
    fn complete(&self, key: &QueryKey, messages: &[ChatMessage]) -> Result<String, BackendError> {
        (**self).complete(key, messages)
    }
}
