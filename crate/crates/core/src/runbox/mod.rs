//! Running compiled candidates against test cases.
//!
//! Each case runs with its stdin piped in, inside a scratch working
//! directory, under a wall-clock limit and an stdout cap. Outcomes fall into
//! exactly one [`VerdictStatus`].

mod asan;

use std::fs;
use std::os::unix::process::ExitStatusExt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use asan::{is_sanitizer_output, parse_sanitizer_report, SanitizerReport, StackFrame};

use crate::corpus::{CompareMode, TestCase};
use crate::process::{self, Limits};

/// One error per run, symbolized, no leak checking (decompiled programs rarely free).
pub const SANITIZER_OPTIONS: &str = "halt_on_error=1:abort_on_error=0:detect_leaks=0:symbolize=1";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot execute {path}: {source}")]
    ExecError {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("text contains no sanitizer error banner")]
    NotASanitizerReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictStatus {
    Pass,
    OutputMismatch,
    SanitizerAbort,
    Crash,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub case_index: usize,
    pub status: VerdictStatus,
    pub actual_stdout: String,
    /// Stdout exceeded the capture cap and `actual_stdout` is a prefix.
    pub stdout_truncated: bool,
    pub sanitizer: Option<SanitizerReport>,
    pub exit_code: Option<i32>,
    pub signal: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunLimits {
    pub stdout_cap: usize,
    /// Address-space cap in MiB; ignored for sanitizer builds.
    pub address_space_mb: Option<u64>,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            stdout_cap: 1 << 20,
            address_space_mb: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions<'a> {
    pub limits: RunLimits,
    /// Working directory for the program under test.
    pub scratch_dir: PathBuf,
    /// Where `case<j>.asan.txt` reports are archived, if anywhere.
    pub report_dir: Option<PathBuf>,
    /// Source the binary was built from, for resolving faulting statements.
    pub source: &'a str,
    pub sanitized: bool,
    /// Keep running after the first non-passing case.
    pub run_all: bool,
}

pub fn compare_output(actual: &str, expected: &str, mode: CompareMode) -> bool {
    match mode {
        CompareMode::Exact => actual == expected,
        CompareMode::TrailingWhitespaceNormalized => normalize(actual) == normalize(expected),
    }
}

fn normalize(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.lines().map(|l| l.trim_end()).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

pub fn run_tests(binary: &Path, cases: &[TestCase], opts: &RunOptions<'_>) -> Result<Vec<TestVerdict>, RunError> {
    let exec_err = |source| RunError::ExecError {
        path: binary.to_path_buf(),
        source,
    };
    fs::create_dir_all(&opts.scratch_dir).map_err(exec_err)?;
    let binary = binary.canonicalize().map_err(exec_err)?;

    let mut verdicts = Vec::with_capacity(cases.len());
    for (j, case) in cases.iter().enumerate() {
        let mut cmd = Command::new(&binary);
        cmd.current_dir(&opts.scratch_dir)
            .env("ASAN_OPTIONS", SANITIZER_OPTIONS)
            .env("LC_ALL", "C");
        let limits = Limits {
            wall_time: Duration::from_millis(case.timeout_ms),
            output_cap: opts.limits.stdout_cap,
            address_space: if opts.sanitized {
                None
            } else {
                opts.limits.address_space_mb.map(|mb| mb << 20)
            },
        };
        let out = process::run(cmd, case.stdin_text.as_bytes(), &limits).map_err(exec_err)?;
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        let stderr = String::from_utf8_lossy(&out.stderr);

        let mut verdict = TestVerdict {
            case_index: j,
            status: VerdictStatus::Pass,
            actual_stdout: stdout,
            stdout_truncated: out.stdout_truncated,
            sanitizer: None,
            exit_code: out.status.and_then(|s| s.code()),
            signal: out.status.and_then(|s| s.signal()),
        };
        if is_sanitizer_output(&stderr) {
            if let Some(dir) = &opts.report_dir {
                // archiving is best effort; the verdict carries the text anyway
                if fs::create_dir_all(dir).is_ok() {
                    let _ = fs::write(dir.join(format!("case{j}.asan.txt")), stderr.as_bytes());
                }
            }
            // the banner matched, so parsing cannot fail
            verdict.sanitizer = parse_sanitizer_report(&stderr, opts.source).ok();
            verdict.status = VerdictStatus::SanitizerAbort;
        } else if out.timed_out() {
            verdict.status = VerdictStatus::Timeout;
        } else if verdict.signal.is_some() || verdict.exit_code != Some(0) {
            verdict.status = VerdictStatus::Crash;
        } else if !compare_output(&verdict.actual_stdout, &case.expected_stdout, case.compare_mode) {
            verdict.status = VerdictStatus::OutputMismatch;
        }

        let failed = verdict.status != VerdictStatus::Pass;
        verdicts.push(verdict);
        if failed && !opts.run_all {
            break;
        }
    }
    Ok(verdicts)
}
