//! Top-level function discovery by brace-balance scanning.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::mask::mask;
use super::PreprocessError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub name: String,
    pub signature_text: String,
    /// Byte range from the opening `{` through the closing `}`.
    pub body_span: Range<usize>,
    pub body_is_empty_or_missing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scope {
    /// `namespace x {` or `extern "C" {`: contents are still top level.
    Transparent,
    Function { header_start: usize, header_end: usize, open: usize },
    Other,
}

const NON_FUNCTION_HEADS: &[&str] = &["struct", "class", "union", "enum", "typedef"];
const NOT_A_NAME: &[&str] = &[
    "__attribute__",
    "__declspec",
    "if",
    "while",
    "for",
    "switch",
    "return",
    "sizeof",
    "decltype",
    "alignas",
];

pub fn index_functions(code: &str) -> Result<Vec<FunctionRecord>, PreprocessError> {
    let masked = mask(code);
    let m = masked.as_bytes();
    let mut stack: Vec<Scope> = Vec::new();
    let mut records = Vec::new();
    let mut stmt_start = 0usize;
    let mut at_line_start = true;
    let mut i = 0;

    while i < m.len() {
        let b = m[i];
        let top_level = stack.iter().all(|s| *s == Scope::Transparent);

        if at_line_start && top_level && b == b'#' {
            // preprocessor line, with backslash continuations
            while i < m.len() && !(m[i] == b'\n' && (i == 0 || m[i - 1] != b'\\')) {
                i += 1;
            }
            stmt_start = i;
            continue;
        }
        if b == b'\n' {
            at_line_start = true;
        } else if !b.is_ascii_whitespace() {
            at_line_start = false;
        }

        match b {
            b'{' => {
                let scope = if top_level {
                    classify(code, &masked, stmt_start, i)
                } else {
                    Scope::Other
                };
                stack.push(scope);
                stmt_start = i + 1;
            }
            b'}' => {
                let scope = stack
                    .pop()
                    .ok_or(PreprocessError::UnbalancedBraces { offset: i })?;
                if let Scope::Function {
                    header_start,
                    header_end,
                    open,
                } = scope
                {
                    let header = &code[header_start..header_end];
                    records.push(FunctionRecord {
                        name: function_name(&masked[header_start..header_end]).unwrap_or_default(),
                        signature_text: header.trim().to_string(),
                        body_span: open..i + 1,
                        body_is_empty_or_missing: masked[open + 1..i].trim().is_empty(),
                    });
                }
                stmt_start = i + 1;
            }
            b';' if top_level => stmt_start = i + 1,
            _ => {}
        }
        i += 1;
    }

    if !stack.is_empty() {
        return Err(PreprocessError::UnbalancedBraces { offset: m.len() });
    }
    Ok(records)
}

fn classify(code: &str, masked: &str, start: usize, open: usize) -> Scope {
    let header = masked[start..open].trim();
    let first_word = header
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .next()
        .unwrap_or("");
    if first_word == "namespace" {
        return Scope::Transparent;
    }
    if first_word == "extern" && code[start..open].contains("\"C") && !header.contains('(') {
        return Scope::Transparent;
    }
    if header.is_empty() || !header.contains('(') || NON_FUNCTION_HEADS.contains(&first_word) {
        return Scope::Other;
    }
    // `int a[] = { ... }` and friends
    let before_paren = &header[..header.find('(').unwrap()];
    if before_paren.contains('=') && !before_paren.contains("operator") {
        return Scope::Other;
    }
    let trimmed_tail = header.trim_end();
    let plausible_tail = trimmed_tail.ends_with(')')
        || ["const", "noexcept", "override", "final", "volatile", "throw()"]
            .iter()
            .any(|q| trimmed_tail.ends_with(q))
        || header.contains("->")
        || header.contains(") :");
    if !plausible_tail {
        return Scope::Other;
    }
    let lead = masked[start..open].len() - masked[start..open].trim_start().len();
    let trail = masked[start..open].len() - masked[start..open].trim_end().len();
    Scope::Function {
        header_start: start + lead,
        header_end: open - trail,
        open,
    }
}

/// The identifier before the first `(` that opens a parameter list rather
/// than a declarator group like `(**f)`.
fn function_name(header: &str) -> Option<String> {
    let bytes = header.as_bytes();
    for (pos, _) in header.match_indices('(') {
        let after = header[pos + 1..].trim_start();
        if after.starts_with('*') || after.starts_with('&') || after.starts_with('^') {
            continue;
        }
        let mut end = pos;
        while end > 0 && bytes[end - 1].is_ascii_whitespace() {
            end -= 1;
        }
        let mut begin = end;
        let mut op = end;
        while op > 0 && b"=!<>+-*/%&|^[]~,".contains(&bytes[op - 1]) {
            op -= 1;
        }
        if op < end && header[..op].trim_end().ends_with("operator") {
            begin = header[..op].trim_end().len();
        }
        while begin > 0 {
            let c = bytes[begin - 1];
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'~' || c == b':' {
                begin -= 1;
            } else {
                break;
            }
        }
        let name = &header[begin..end];
        if name.is_empty() || NOT_A_NAME.contains(&name) {
            continue;
        }
        return Some(name.to_string());
    }
    None
}
