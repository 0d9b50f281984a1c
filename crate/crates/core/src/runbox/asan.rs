use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::RunError;
use crate::compilebox::SOURCE_FILE_NAME;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackFrame {
    pub function: String,
    pub file: Option<String>,
    pub line: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanitizerReport {
    /// e.g. `heap-buffer-overflow`, `SEGV`, `double-free`.
    pub kind: String,
    /// Source line at the first in-program frame, trimmed.
    pub faulting_statement: Option<String>,
    pub frames: Vec<StackFrame>,
    pub raw_text: String,
}

static BANNER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"==\d+==\s*ERROR:\s*(?P<san>\w*Sanitizer):\s*(?:attempting\s+)?(?P<kind>[A-Za-z][\w\-]*)")
        .unwrap()
});
static FRAME_WITH_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*#\d+\s+0x[0-9a-fA-F]+\s+in\s+(?P<func>.+?)\s+(?P<file>\S+?):(?P<line>\d+)(?::\d+)?\s*$")
        .unwrap()
});
static FRAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*#\d+\s+0x[0-9a-fA-F]+(?:\s+in\s+(?P<func>\S+))?").unwrap());

pub fn is_sanitizer_output(text: &str) -> bool {
    BANNER.is_match(text)
}

fn is_runtime_file(file: &str) -> bool {
    const MARKERS: &[&str] = &[
        "libsanitizer",
        "compiler-rt",
        "sysdeps",
        "/csu/",
        "libc-start",
        "/usr/include/",
        "/usr/lib/",
        "/libgcc/",
        "/libstdc++",
    ];
    file.starts_with("../") || MARKERS.iter().any(|m| file.contains(m))
}

pub fn parse_sanitizer_report(raw: &str, code: &str) -> Result<SanitizerReport, RunError> {
    let banner = BANNER.captures(raw).ok_or(RunError::NotASanitizerReport)?;
    let kind = banner["kind"].to_string();
    let after = &raw[banner.get(0).unwrap().end()..];

    // first stack trace only; later ones describe allocation/free sites
    let mut frames = Vec::new();
    for line in after.lines().skip(1) {
        if let Some(c) = FRAME_WITH_LINE.captures(line) {
            frames.push(StackFrame {
                function: c["func"].to_string(),
                file: Some(c["file"].to_string()),
                line: c["line"].parse().ok(),
            });
        } else if let Some(c) = FRAME.captures(line) {
            frames.push(StackFrame {
                function: c.name("func").map_or("??", |m| m.as_str()).to_string(),
                file: None,
                line: None,
            });
        } else if !frames.is_empty() {
            break;
        }
    }

    let src: Vec<&str> = code.lines().collect();
    let names_source = |f: &&StackFrame| {
        f.file
            .as_deref()
            .is_some_and(|p| p.rsplit('/').next() == Some(SOURCE_FILE_NAME))
    };
    let any_named = frames.iter().any(|f| names_source(&f));
    let faulting_statement = frames
        .iter()
        .filter(|f| {
            if any_named {
                names_source(f)
            } else {
                f.file.as_deref().is_some_and(|p| !is_runtime_file(p))
            }
        })
        .filter_map(|f| f.line)
        .find(|&l| l >= 1 && (l as usize) <= src.len())
        .map(|l| src[l as usize - 1].trim().to_string());

    Ok(SanitizerReport {
        kind,
        faulting_statement,
        frames,
        raw_text: raw.to_string(),
    })
}
