use std::sync::LazyLock;

use regex::Regex;

use super::LlmError;

static LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[A-Za-z_]\w*|case\s.+|default)\s*:$").unwrap());

fn fence_of(line: &str) -> Option<(char, usize)> {
    let t = line.trim_start();
    let c = t.chars().next()?;
    if c != '`' && c != '~' {
        return None;
    }
    let n = t.chars().take_while(|&x| x == c).count();
    (n >= 3).then_some((c, n))
}

fn is_closing(line: &str, open: (char, usize)) -> bool {
    let t = line.trim();
    fence_of(t).is_some_and(|(c, n)| c == open.0 && n >= open.1 && t.chars().all(|x| x == c))
}

/// Contents of every fenced block, or `None` when the text has no fence.
fn fenced_blocks(text: &str) -> Option<Vec<String>> {
    let mut blocks = Vec::new();
    let mut current: Option<((char, usize), Vec<&str>)> = None;
    for line in text.lines() {
        match &mut current {
            None => {
                if let Some(open) = fence_of(line) {
                    current = Some((open, Vec::new()));
                }
            }
            Some((open, body)) => {
                if is_closing(line, *open) {
                    blocks.push(body.join("\n"));
                    current = None;
                } else if fence_of(line).is_none() {
                    // stray fence markers never reach the output
                    body.push(line);
                }
            }
        }
    }
    // an unterminated block runs to the end of the response
    if let Some((_, body)) = current {
        blocks.push(body.join("\n"));
    }
    (!blocks.is_empty()).then_some(blocks)
}

fn is_code_line(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() {
        return false;
    }
    const STARTS: &[&str] = &["#", "//", "/*", "*", "{", "}"];
    const ENDS: &[char] = &[';', '{', '}', ')', ',', '\\', '('];
    STARTS.iter().any(|s| t.starts_with(s)) || t.ends_with(ENDS) || t.ends_with("*/") || LABEL.is_match(t)
}

/// Drops leading and trailing lines that do not look like code; what lies
/// between is kept byte for byte.
fn strip_prose(text: &str) -> &str {
    let mut start = None;
    let mut end = 0;
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        if is_code_line(body) {
            start.get_or_insert(pos);
            end = pos + line.len();
        }
        pos += line.len();
    }
    match start {
        Some(s) => &text[s..end],
        None => "",
    }
}

/// Pulls candidate source out of a model response.
pub fn extract_code(response: &str) -> Result<String, LlmError> {
    let joined;
    let text = match fenced_blocks(response) {
        Some(blocks) => {
            joined = blocks.join("\n");
            joined.as_str()
        }
        None => response,
    };
    let code = strip_prose(text);
    if code.trim().is_empty() {
        return Err(LlmError::EmptyExtraction);
    }
    Ok(code.to_string())
}
