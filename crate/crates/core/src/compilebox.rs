//! Compiler invocation and diagnostic normalization.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::LazyLock;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::SourceUnit;
use crate::process::{self, Limits};

pub const SOURCE_FILE_NAME: &str = "candidate.cpp";
const BINARY_NAME: &str = "a.out";
const TRUNCATION_MARKER: &str = "\n[... truncated]";

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("compiler not found: {0}")]
    CompilerNotFound(String),

    #[error("compilation exceeded {0} ms")]
    CompileTimeout(u64),

    #[error("work directory {path}: {source}")]
    WorkdirError {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompilerConfig {
    pub path: String,
    pub base_flags: Vec<String>,
    pub sanitize_flags: Vec<String>,
    pub timeout_ms: u64,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        CompilerConfig {
            path: "g++".into(),
            base_flags: owned(&["-x", "c++", "-std=gnu++17", "-Wall", "-O0"]),
            sanitize_flags: owned(&["-fsanitize=address", "-fno-omit-frame-pointer", "-g"]),
            timeout_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompileRequest<'a> {
    pub unit: &'a SourceUnit,
    pub sanitize: bool,
    pub extra_flags: Vec<String>,
    pub workdir: PathBuf,
    pub time_limit_ms: u64,
    /// Seeds the scratch directory suffix.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileResult {
    pub success: bool,
    pub binary_path: Option<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
    pub raw_stderr: String,
    pub duration_ms: u64,
}

impl CompileResult {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
    Note,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: Option<u32>,
    pub column: Option<u32>,
    /// Source echo and caret lines printed by the compiler, gutter removed.
    pub excerpt: Option<String>,
}

/// Output of [`parse_stderr`]: structured diagnostics plus any lines that
/// came before the first diagnostic and matched no known shape.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedStderr {
    pub diagnostics: Vec<Diagnostic>,
    pub unstructured: Vec<String>,
}

fn scratch_suffix(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    format!("{:08x}", rng.gen::<u32>())
}

pub fn compile(cfg: &CompilerConfig, req: &CompileRequest<'_>) -> Result<CompileResult, CompileError> {
    let workdir_err = |path: &Path, source| CompileError::WorkdirError {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(&req.workdir).map_err(|e| workdir_err(&req.workdir, e))?;
    let scratch = req.workdir.join(format!("cc-{}", scratch_suffix(req.seed)));
    if scratch.exists() {
        fs::remove_dir_all(&scratch).map_err(|e| workdir_err(&scratch, e))?;
    }
    fs::create_dir_all(&scratch).map_err(|e| workdir_err(&scratch, e))?;
    let src = scratch.join(SOURCE_FILE_NAME);
    let bin = scratch.join(BINARY_NAME);
    fs::write(&src, &req.unit.code).map_err(|e| workdir_err(&src, e))?;

    let mut cmd = Command::new(&cfg.path);
    cmd.args(&cfg.base_flags);
    if req.sanitize {
        cmd.args(&cfg.sanitize_flags);
    }
    cmd.args(&req.extra_flags)
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .current_dir(&scratch)
        .env("LC_ALL", "C");

    let limits = Limits {
        wall_time: Duration::from_millis(req.time_limit_ms),
        output_cap: 1 << 20,
        address_space: None,
    };
    let out = process::run(cmd, b"", &limits).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CompileError::CompilerNotFound(cfg.path.clone()),
        _ => workdir_err(&scratch, e),
    })?;
    if out.timed_out() {
        return Err(CompileError::CompileTimeout(req.time_limit_ms));
    }
    let raw_stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    let success = out.status.is_some_and(|s| s.success()) && bin.is_file();
    Ok(CompileResult {
        success,
        binary_path: success.then_some(bin),
        diagnostics: parse_diagnostics(&raw_stderr),
        raw_stderr,
        duration_ms: out.duration.as_millis() as u64,
    })
}

static LOCATED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?P<file>[^\s:][^:]*?):(?P<line>\d+):(?:(?P<col>\d+):)?\s*(?P<sev>fatal error|error|warning|note):\s?(?P<msg>.*)$",
    )
    .unwrap()
});
static UNLOCATED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<tool>[^\s:]+):\s*(?P<sev>fatal error|error|warning|note):\s?(?P<msg>.*)$").unwrap()
});
static LINKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:\S*ld(?:\.\w+)?: )?(?P<obj>[^\s:]+):\([^)]*\):\s*(?P<msg>.*)$").unwrap()
});
static LINKER_PLAIN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\S*ld(?:\.\w+)?: (?P<msg>.*)$").unwrap());
static CONTEXT_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?:[^\s:]+: (?:In |At global scope|At top level)|In file included from |\s+from \S+:\d+|compilation terminated\.|\d+ (?:errors?|warnings?)(?: and \d+ \w+)? generated\.|\S*ld(?:\.\w+)?: [^:]+: in function )",
    )
    .unwrap()
});
static GUTTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(?:\d+|\+\+\+)?\s\|(?: ?)(?P<rest>.*)$").unwrap());
static CARET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*[\^~]+[\^~\s]*$").unwrap());
static LOCATED_TEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[^\s:][^:]*?:\d+:(?:\d+:)?\s*(?P<rest>.*)$").unwrap());
static ABS_PATH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:/[A-Za-z0-9_.+\-]+)+/(?P<base>[A-Za-z0-9_.+\-]+)").unwrap());

fn severity(s: &str) -> Severity {
    match s {
        "warning" => Severity::Warning,
        "note" => Severity::Note,
        _ => Severity::Error,
    }
}

/// Replaces absolute paths by their final component.
pub fn strip_paths(text: &str) -> String {
    ABS_PATH.replace_all(text, "$base").into_owned()
}

fn flush_pending(pending: &mut Option<String>, diags: &mut [Diagnostic]) {
    if let (Some(text), Some(prev)) = (pending.take(), diags.last_mut()) {
        prev.message.push('\n');
        prev.message.push_str(&text);
    }
}

fn push_line(slot: &mut Option<String>, line: &str) {
    match slot {
        Some(s) => {
            s.push('\n');
            s.push_str(line);
        }
        None => *slot = Some(line.to_string()),
    }
}

pub fn parse_diagnostics(raw_stderr: &str) -> Vec<Diagnostic> {
    parse_stderr(raw_stderr).diagnostics
}

/// Parses GCC/Clang stderr. File names are dropped; `note:` lines and other
/// continuation text fold into the preceding diagnostic.
pub fn parse_stderr(raw_stderr: &str) -> ParsedStderr {
    let mut out = ParsedStderr::default();
    // a source-echo line seen under clang, pending its caret line
    let mut pending_echo: Option<String> = None;

    for line in raw_stderr.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(c) = LOCATED.captures(line) {
            flush_pending(&mut pending_echo, &mut out.diagnostics);
            let sev = severity(&c["sev"]);
            let msg = strip_paths(c["msg"].trim());
            if sev == Severity::Note {
                if let Some(prev) = out.diagnostics.last_mut() {
                    prev.message.push_str("\nnote: ");
                    prev.message.push_str(&msg);
                    continue;
                }
            }
            out.diagnostics.push(Diagnostic {
                severity: sev,
                message: msg,
                line: c["line"].parse().ok().filter(|&n| n > 0),
                column: c.name("col").and_then(|m| m.as_str().parse().ok()).filter(|&n| n > 0),
                excerpt: None,
            });
            continue;
        }
        if CONTEXT_HEADER.is_match(line) {
            flush_pending(&mut pending_echo, &mut out.diagnostics);
            continue;
        }
        if let Some(c) = UNLOCATED.captures(line) {
            flush_pending(&mut pending_echo, &mut out.diagnostics);
            out.diagnostics.push(Diagnostic {
                severity: severity(&c["sev"]),
                message: strip_paths(c["msg"].trim()),
                line: None,
                column: None,
                excerpt: None,
            });
            continue;
        }
        if let Some(c) = LINKER.captures(line).or_else(|| LINKER_PLAIN.captures(line)) {
            flush_pending(&mut pending_echo, &mut out.diagnostics);
            out.diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: strip_paths(c["msg"].trim()),
                line: None,
                column: None,
                excerpt: None,
            });
            continue;
        }

        let Some(prev) = out.diagnostics.last_mut() else {
            out.unstructured.push(strip_paths(line));
            continue;
        };
        if let Some(c) = GUTTER.captures(line) {
            push_line(&mut prev.excerpt, c.name("rest").map_or("", |m| m.as_str()));
        } else if CARET.is_match(line) {
            if let Some(echo) = pending_echo.take() {
                push_line(&mut prev.excerpt, &echo);
            }
            push_line(&mut prev.excerpt, line);
        } else {
            if let Some(echo) = pending_echo.take() {
                prev.message.push('\n');
                prev.message.push_str(&echo);
            }
            let text = LOCATED_TEXT
                .captures(line)
                .map_or_else(|| line.to_string(), |c| c["rest"].to_string());
            pending_echo = Some(strip_paths(&text));
        }
    }
    flush_pending(&mut pending_echo, &mut out.diagnostics);
    out
}

/// Error messages with the offending source lines, for a repair prompt.
pub fn render_error_context(
    diags: &[Diagnostic],
    code: &str,
    context_lines: usize,
    max_chars: usize,
) -> String {
    let src: Vec<&str> = code.lines().collect();
    let mut errors: Vec<&Diagnostic> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
    errors.sort_by(|a, b| (a.line, a.column, &a.message).cmp(&(b.line, b.column, &b.message)));
    errors.dedup_by(|a, b| (a.line, a.column, &a.message) == (b.line, b.column, &b.message));

    let mut blocks = Vec::with_capacity(errors.len());
    for d in errors {
        let mut block = format!("error: {}", d.message);
        if let Some(line) = d.line {
            let idx = line as usize - 1;
            if idx < src.len() {
                let lo = idx.saturating_sub(context_lines);
                let hi = (idx + context_lines).min(src.len() - 1);
                for l in &src[lo..=hi] {
                    block.push('\n');
                    block.push_str(l);
                }
            }
        }
        blocks.push(block);
    }
    truncate_with_marker(blocks.join("\n\n"), max_chars)
}

fn truncate_with_marker(mut text: String, max_chars: usize) -> String {
    if text.len() <= max_chars {
        return text;
    }
    if max_chars <= TRUNCATION_MARKER.len() {
        return TRUNCATION_MARKER[..max_chars].to_string();
    }
    let mut cut = max_chars - TRUNCATION_MARKER.len();
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    text.truncate(cut);
    text.push_str(TRUNCATION_MARKER);
    text
}
