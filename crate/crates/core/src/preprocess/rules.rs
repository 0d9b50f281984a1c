use std::collections::BTreeSet;
use std::ops::Range;

use regex::Regex;

use super::mask::mask;
use super::{PreprocessError, RuleConfig};

/// Compiled form of a [`RuleConfig`].
#[derive(Debug, Clone)]
pub struct Rules {
    elf: Option<Regex>,
    conventions: Vec<Regex>,
    canary: Vec<Regex>,
}

impl Default for Rules {
    fn default() -> Self {
        Rules::new(&RuleConfig::default()).expect("embedded rules compile")
    }
}

fn compile(pattern: &str) -> Result<Regex, PreprocessError> {
    Regex::new(pattern).map_err(|source| PreprocessError::Pattern {
        pattern: pattern.to_string(),
        source,
    })
}

static MAIN_HEADER: std::sync::LazyLock<Regex> = std::sync::LazyLock::new(|| {
    Regex::new(r"(?m)^[ \t]*((?:[A-Za-z_]\w*[ \t\*&]+)+)main[ \t]*\(([^()]*)\)").unwrap()
});

impl Rules {
    pub fn new(cfg: &RuleConfig) -> Result<Self, PreprocessError> {
        let elf = if cfg.elf_symbols.is_empty() {
            None
        } else {
            let alts: Vec<String> = cfg.elf_symbols.iter().map(|s| regex::escape(s)).collect();
            // identifier boundaries that treat `_` as part of the name
            Some(compile(&format!(
                r"(?:^|[^A-Za-z0-9_])(?:{})(?:[^A-Za-z0-9_]|$)",
                alts.join("|")
            ))?)
        };
        Ok(Rules {
            elf,
            conventions: cfg
                .calling_conventions
                .iter()
                .map(|p| compile(p))
                .collect::<Result<_, _>>()?,
            canary: cfg
                .canary_patterns
                .iter()
                .map(|p| compile(p))
                .collect::<Result<_, _>>()?,
        })
    }

    pub(super) fn strip_elf_text(&self, code: &str) -> String {
        let Some(elf) = &self.elf else {
            return code.to_string();
        };
        let masked = mask(code);
        let lines = line_spans(&masked);
        let hits: Vec<usize> = lines
            .iter()
            .enumerate()
            .filter(|(_, r)| elf.is_match(&masked[(*r).clone()]))
            .map(|(i, _)| i)
            .collect();
        delete_statements(code, &masked, &lines, &hits)
    }

    pub(super) fn strip_canary_text(&self, code: &str) -> String {
        let masked = mask(code);
        let lines = line_spans(&masked);
        let mut hits = BTreeSet::new();
        let mut guards = BTreeSet::new();
        for (i, r) in lines.iter().enumerate() {
            let line = &masked[r.clone()];
            for re in &self.canary {
                if let Some(caps) = re.captures(line) {
                    hits.insert(i);
                    if let Some(g) = caps.name("guard") {
                        guards.insert(g.as_str().to_string());
                    }
                }
            }
        }
        if !guards.is_empty() {
            let names: Vec<String> = guards.iter().map(|g| regex::escape(g)).collect();
            // plain declarations of the guard local, e.g. `unsigned __int64 v5;`
            let decl = Regex::new(&format!(
                r"^\s*(?:[A-Za-z_]\w*[\s\*]+)+(?:{})\s*;\s*$",
                names.join("|")
            ))
            .expect("escaped names form a valid pattern");
            for (i, r) in lines.iter().enumerate() {
                let line = masked[r.clone()].trim_end_matches('\n');
                if decl.is_match(line) && !line.trim_start().starts_with("return") {
                    hits.insert(i);
                }
            }
        }
        let hits: Vec<usize> = hits.into_iter().collect();
        delete_statements(code, &masked, &lines, &hits)
    }

    pub(super) fn fix_declarations_text(&self, code: &str) -> String {
        let masked = mask(code);
        let mut cut: Vec<Range<usize>> = Vec::new();
        for re in &self.conventions {
            for m in re.find_iter(&masked) {
                let mut end = m.end();
                while end < masked.len() && matches!(masked.as_bytes()[end], b' ' | b'\t') {
                    end += 1;
                }
                cut.push(m.start()..end);
            }
        }
        let code = remove_ranges(code, cut);
        rewrite_main(&code)
    }
}

fn line_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, b) in text.bytes().enumerate() {
        if b == b'\n' {
            spans.push(start..i + 1);
            start = i + 1;
        }
    }
    if start < text.len() {
        spans.push(start..text.len());
    }
    spans
}

/// Removes each hit line together with the rest of the statement it starts:
/// an unterminated header such as `if (...)` or a function signature pulls in
/// the following statement or braced block.
fn delete_statements(code: &str, masked: &str, lines: &[Range<usize>], hits: &[usize]) -> String {
    if hits.is_empty() {
        return code.to_string();
    }
    let mut marked = vec![false; lines.len()];
    for &i in hits {
        if marked[i] {
            continue;
        }
        let first = &masked[lines[i].clone()];
        if first.matches('}').count() > first.matches('{').count() {
            // closes an enclosing block; removing it would unbalance the file
            continue;
        }
        let mut depth: i64 = 0;
        let mut j = i;
        while j < lines.len() {
            marked[j] = true;
            let line = &masked[lines[j].clone()];
            depth += line.matches('{').count() as i64 - line.matches('}').count() as i64;
            let t = line.trim();
            let complete = depth <= 0
                && (t.ends_with(';') || t.ends_with('}') || (j == i && t.starts_with('#')));
            if complete {
                break;
            }
            j += 1;
        }
    }
    let mut out = String::with_capacity(code.len());
    for (i, r) in lines.iter().enumerate() {
        if !marked[i] {
            out.push_str(&code[r.clone()]);
        }
    }
    out
}

fn remove_ranges(code: &str, mut cut: Vec<Range<usize>>) -> String {
    if cut.is_empty() {
        return code.to_string();
    }
    cut.sort_by_key(|r| (r.start, r.end));
    let mut out = String::with_capacity(code.len());
    let mut pos = 0;
    for r in cut {
        if r.start > pos {
            out.push_str(&code[pos..r.start]);
        }
        pos = pos.max(r.end);
    }
    out.push_str(&code[pos..]);
    out
}

fn param_name(param: &str) -> Option<&str> {
    let p = param.trim().trim_end_matches("[]").trim_end();
    let start = p
        .rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .map_or(0, |i| i + 1);
    let name = &p[start..];
    (!name.is_empty() && start > 0).then_some(name)
}

fn is_conforming_main(ret: &str, params: &[&str]) -> bool {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    if norm(ret) != "int" {
        return false;
    }
    match params {
        [] => true,
        [p] => p.trim() == "void",
        [a, b] => {
            let b = norm(b);
            norm(a) == "int argc" && (b == "char **argv" || b == "char *argv[]" || b == "char** argv")
        }
        _ => false,
    }
}

/// Rewrites a non-standard `main` prototype to `int main()` or
/// `int main(int argc, char **argv)` and renames the old parameters in the body.
fn rewrite_main(code: &str) -> String {
    let masked = mask(code);
    let mut edits: Vec<(Range<usize>, String)> = Vec::new();
    for caps in MAIN_HEADER.captures_iter(&masked) {
        let ret = caps.get(1).unwrap().as_str();
        let ret_words: Vec<&str> = ret.split_whitespace().collect();
        if ret_words.iter().any(|w| matches!(*w, "return" | "else" | "case" | "goto" | "new")) {
            continue;
        }
        let params_text = caps.get(2).unwrap().as_str();
        let params: Vec<&str> = if params_text.trim().is_empty() {
            Vec::new()
        } else {
            params_text.split(',').collect()
        };
        if is_conforming_main(ret, &params) {
            continue;
        }
        let whole = caps.get(0).unwrap();
        let header_start = caps.get(1).unwrap().start();

        let is_void_list = params.len() == 1 && params[0].trim() == "void";
        let old_names: Vec<Option<&str>> = params.iter().map(|p| param_name(p)).collect();
        let body = body_after(&masked, whole.end());
        let uses = |name: Option<&str>| -> bool {
            match (name, &body) {
                (Some(n), Some(b)) => identifier_regex(n).is_match(&masked[b.clone()]),
                _ => false,
            }
        };
        let new_header = if params.is_empty() || is_void_list {
            "int main()".to_string()
        } else if params.len() >= 3 && uses(old_names[2]) {
            "int main(int argc, char **argv, char **envp)".to_string()
        } else {
            "int main(int argc, char **argv)".to_string()
        };
        edits.push((header_start..whole.end(), new_header));

        if let Some(body) = body {
            let targets = ["argc", "argv", "envp"];
            for (old, new) in old_names.iter().zip(targets) {
                let Some(old) = old else { continue };
                if *old == new {
                    continue;
                }
                for m in identifier_regex(old).find_iter(&masked[body.clone()]) {
                    edits.push((body.start + m.start()..body.start + m.end(), new.to_string()));
                }
            }
        }
    }
    if edits.is_empty() {
        return code.to_string();
    }
    edits.sort_by_key(|(r, _)| r.start);
    let mut out = String::with_capacity(code.len());
    let mut pos = 0;
    for (r, text) in edits {
        if r.start < pos {
            continue;
        }
        out.push_str(&code[pos..r.start]);
        out.push_str(&text);
        pos = r.end;
    }
    out.push_str(&code[pos..]);
    out
}

fn identifier_regex(name: &str) -> Regex {
    Regex::new(&format!(r"\b{}\b", regex::escape(name))).expect("escaped identifier")
}

/// The braced body following a function header ending at `from`, if the
/// header is a definition rather than a prototype.
fn body_after(masked: &str, from: usize) -> Option<Range<usize>> {
    let rest = &masked[from..];
    let open_rel = rest.find(|c: char| !c.is_whitespace())?;
    if !rest[open_rel..].starts_with('{') {
        return None;
    }
    let open = from + open_rel;
    let mut depth = 0usize;
    for (i, b) in masked[open..].bytes().enumerate() {
        match b {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open..open + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}
