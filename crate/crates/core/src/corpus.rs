//! Benchmark manifests, token estimation and context-length bucketing.
//!
//! A manifest is a JSON array of program objects:
//!
//! ```json
//! [{"id": "p01", "pseudocode": "p01.c",
//!   "tests": [{"stdin": "5\n", "stdout": "5\n", "timeout_ms": 5000}]}]
//! ```
//!
//! Paths are relative to the manifest's directory. A test may reference its
//! input or expected output by file (`stdin_file`, `stdout_file`) instead of
//! inline text.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{info, warn};

pub const DEFAULT_TIMEOUT_MS: u64 = 5000;

pub const DEFAULT_BUCKET_LO: usize = 200;
pub const DEFAULT_BUCKET_HI: usize = 2048;
pub const DEFAULT_BUCKET_COUNT: usize = 5;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed manifest {path}: {reason}")]
    ManifestParse { path: PathBuf, reason: String },

    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),

    #[error("invalid bucket range [{lo}, {hi}) with k={k}")]
    InvalidRange { lo: usize, hi: usize, k: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CompareMode {
    Exact,
    #[default]
    TrailingWhitespaceNormalized,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub stdin_text: String,
    pub expected_stdout: String,
    pub timeout_ms: u64,
    pub compare_mode: CompareMode,
}

impl TestCase {
    pub fn new(stdin_text: impl Into<String>, expected_stdout: impl Into<String>) -> Self {
        TestCase {
            stdin_text: stdin_text.into(),
            expected_stdout: expected_stdout.into(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            compare_mode: CompareMode::default(),
        }
    }
}

/// Where an entry's position falls relative to the configured bucket range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Bucket {
    #[default]
    Unassigned,
    /// Outside `[lo, hi)`; flagged during bucketing.
    OutOfRange,
    Index(usize),
}

impl Bucket {
    pub fn index(self) -> Option<usize> {
        match self {
            Bucket::Index(i) => Some(i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramEntry {
    pub id: String,
    pub pseudocode_path: PathBuf,
    /// Decoded pseudocode text (lossy if the file was not valid UTF-8).
    pub pseudocode: String,
    pub decode_lossy: bool,
    pub test_cases: Vec<TestCase>,
    pub source_tokens: usize,
    pub bucket: Bucket,
}

impl ProgramEntry {
    pub fn from_source(id: impl Into<String>, pseudocode: impl Into<String>) -> Self {
        let pseudocode = pseudocode.into();
        let source_tokens = estimate_tokens(&pseudocode);
        ProgramEntry {
            id: id.into(),
            pseudocode_path: PathBuf::new(),
            pseudocode,
            decode_lossy: false,
            test_cases: Vec::new(),
            source_tokens,
            bucket: Bucket::Unassigned,
        }
    }
}

// ---- token estimation ----

pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> usize;
}

/// `ceil(bytes / bytes_per_token)`.
#[derive(Debug, Clone, Copy)]
pub struct ByteRatioEstimator {
    pub bytes_per_token: usize,
}

impl Default for ByteRatioEstimator {
    fn default() -> Self {
        ByteRatioEstimator { bytes_per_token: 4 }
    }
}

impl TokenEstimator for ByteRatioEstimator {
    fn estimate(&self, text: &str) -> usize {
        text.len().div_ceil(self.bytes_per_token.max(1))
    }
}

/// Token estimate under the default estimator.
pub fn estimate_tokens(text: &str) -> usize {
    ByteRatioEstimator::default().estimate(text)
}

// ---- bucketing ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketRange {
    pub lo: usize,
    pub hi: usize,
    pub k: usize,
}

impl Default for BucketRange {
    fn default() -> Self {
        BucketRange {
            lo: DEFAULT_BUCKET_LO,
            hi: DEFAULT_BUCKET_HI,
            k: DEFAULT_BUCKET_COUNT,
        }
    }
}

impl BucketRange {
    pub fn new(lo: usize, hi: usize, k: usize) -> Result<Self, CorpusError> {
        if lo >= hi || k < 1 {
            return Err(CorpusError::InvalidRange { lo, hi, k });
        }
        Ok(BucketRange { lo, hi, k })
    }

    /// Parses `LO:HI:K`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected LO:HI:K, got `{text}`"));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad number `{s}` in bucket range: {e}"))
        };
        BucketRange::new(num(parts[0])?, num(parts[1])?, num(parts[2])?).map_err(|e| e.to_string())
    }

    pub fn bucket_of(&self, tokens: usize) -> Bucket {
        if tokens < self.lo || tokens >= self.hi {
            return Bucket::OutOfRange;
        }
        Bucket::Index((tokens - self.lo) * self.k / (self.hi - self.lo))
    }

    /// Inclusive lower bound of bucket `i` (the smallest token count mapped to it).
    pub fn lower_bound(&self, i: usize) -> usize {
        let width = self.hi - self.lo;
        self.lo + (i * width).div_ceil(self.k)
    }
}

pub fn bucket_by_context(
    mut entries: Vec<ProgramEntry>,
    lo: usize,
    hi: usize,
    k: usize,
) -> Result<Vec<ProgramEntry>, CorpusError> {
    let range = BucketRange::new(lo, hi, k)?;
    for entry in &mut entries {
        entry.bucket = range.bucket_of(entry.source_tokens);
        if entry.bucket == Bucket::OutOfRange {
            info!(
                id = %entry.id,
                tokens = entry.source_tokens,
                "entry outside bucket range [{lo}, {hi})"
            );
        }
    }
    Ok(entries)
}

// ---- manifest i/o ----

#[derive(Debug, Serialize, Deserialize)]
struct RawEntry {
    id: String,
    pseudocode: String,
    #[serde(default)]
    tests: Vec<RawTest>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stdin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stdin_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stdout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stdout_file: Option<String>,
    #[serde(default = "default_timeout")]
    timeout_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compare: Option<CompareName>,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CompareName {
    Exact,
    Normalized,
}

fn read_text(path: &Path) -> Result<(String, bool), CorpusError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::MissingArtifact(path.to_path_buf()),
        _ => CorpusError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    match String::from_utf8(bytes) {
        Ok(s) => Ok((s, false)),
        Err(e) => {
            warn!(path = %path.display(), "file is not valid UTF-8; undecodable bytes replaced");
            Ok((String::from_utf8_lossy(e.as_bytes()).into_owned(), true))
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<ProgramEntry>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::MissingArtifact(path.to_path_buf()),
        _ => CorpusError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    let parse_err = |reason: String| CorpusError::ManifestParse {
        path: path.to_path_buf(),
        reason,
    };
    let raw: Vec<RawEntry> = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(raw.len());
    for r in raw {
        if !seen.insert(r.id.clone()) {
            return Err(parse_err(format!("duplicate id `{}`", r.id)));
        }
        let pseudocode_path = base.join(&r.pseudocode);
        let (pseudocode, mut decode_lossy) = read_text(&pseudocode_path)?;

        let mut test_cases = Vec::with_capacity(r.tests.len());
        for (j, t) in r.tests.into_iter().enumerate() {
            if t.timeout_ms == 0 {
                return Err(parse_err(format!("{}: test {j} has timeout_ms = 0", r.id)));
            }
            let mut field = |inline: Option<String>, file: Option<String>, name: &str| {
                match (inline, file) {
                    (Some(s), None) => Ok(s),
                    (None, Some(f)) => {
                        let (s, lossy) = read_text(&base.join(f))?;
                        decode_lossy |= lossy;
                        Ok(s)
                    }
                    (None, None) if name == "stdin" => Ok(String::new()),
                    _ => Err(parse_err(format!(
                        "{}: test {j} needs exactly one of `{name}` / `{name}_file`",
                        r.id
                    ))),
                }
            };
            let stdin_text = field(t.stdin, t.stdin_file, "stdin")?;
            let expected_stdout = field(t.stdout, t.stdout_file, "stdout")?;
            test_cases.push(TestCase {
                stdin_text,
                expected_stdout,
                timeout_ms: t.timeout_ms,
                compare_mode: match t.compare {
                    Some(CompareName::Exact) => CompareMode::Exact,
                    Some(CompareName::Normalized) | None => {
                        CompareMode::TrailingWhitespaceNormalized
                    }
                },
            });
        }

        entries.push(ProgramEntry {
            id: r.id,
            source_tokens: estimate_tokens(&pseudocode),
            pseudocode_path,
            pseudocode,
            decode_lossy,
            test_cases,
            bucket: Bucket::Unassigned,
        });
    }
    Ok(entries)
}

/// Writes `entries` as a manifest at `path`. Pseudocode paths under the
/// manifest's directory are stored relative to it; tests are stored inline.
pub fn save_manifest(path: &Path, entries: &[ProgramEntry]) -> Result<(), CorpusError> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let raw: Vec<RawEntry> = entries
        .iter()
        .map(|e| RawEntry {
            id: e.id.clone(),
            pseudocode: e
                .pseudocode_path
                .strip_prefix(base)
                .unwrap_or(&e.pseudocode_path)
                .to_string_lossy()
                .into_owned(),
            tests: e
                .test_cases
                .iter()
                .map(|t| RawTest {
                    stdin: Some(t.stdin_text.clone()),
                    stdin_file: None,
                    stdout: Some(t.expected_stdout.clone()),
                    stdout_file: None,
                    timeout_ms: t.timeout_ms,
                    compare: Some(match t.compare_mode {
                        CompareMode::Exact => CompareName::Exact,
                        CompareMode::TrailingWhitespaceNormalized => CompareName::Normalized,
                    }),
                })
                .collect(),
        })
        .collect();
    let json = serde_json::to_string_pretty(&raw).expect("manifest serializes");
    fs::write(path, json + "\n").map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
