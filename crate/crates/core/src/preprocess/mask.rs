//! Byte-length-preserving masking of comments and literal contents.
//!
//! Every byte inside a comment or inside the quotes of a string/char literal
//! becomes a space (newlines are kept), so regex and brace scans over the
//! masked text see only code while offsets still index the original.

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Code,
    LineComment,
    BlockComment,
    Str,
    Char,
}

pub fn mask(code: &str) -> String {
    let src = code.as_bytes();
    let mut out = Vec::with_capacity(src.len());
    let mut state = State::Code;
    let mut i = 0;
    while i < src.len() {
        let b = src[i];
        let next = src.get(i + 1).copied();
        match state {
            State::Code => match (b, next) {
                (b'/', Some(b'/')) => {
                    state = State::LineComment;
                    out.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                (b'/', Some(b'*')) => {
                    state = State::BlockComment;
                    out.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                (b'"', _) => {
                    state = State::Str;
                    out.push(b);
                }
                (b'\'', _) if !is_digit_separator(src, i) => {
                    state = State::Char;
                    out.push(b);
                }
                _ => out.push(if b.is_ascii() { b } else { b' ' }),
            },
            State::LineComment => {
                if b == b'\n' {
                    state = State::Code;
                    out.push(b'\n');
                } else {
                    out.push(b' ');
                }
            }
            State::BlockComment => {
                if b == b'*' && next == Some(b'/') {
                    state = State::Code;
                    out.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                out.push(if b == b'\n' { b'\n' } else { b' ' });
            }
            State::Str | State::Char => {
                let close = if state == State::Str { b'"' } else { b'\'' };
                if b == b'\\' && next.is_some() {
                    // keep line splices visible to line-based scans
                    out.push(b' ');
                    out.push(if next == Some(b'\n') { b'\n' } else { b' ' });
                    i += 2;
                    continue;
                }
                if b == close {
                    state = State::Code;
                    out.push(b);
                } else if b == b'\n' {
                    // unterminated literal; recover at end of line
                    state = State::Code;
                    out.push(b'\n');
                } else {
                    out.push(b' ');
                }
            }
        }
        i += 1;
    }
    debug_assert_eq!(out.len(), src.len());
    String::from_utf8(out).expect("masked text is ASCII")
}

// C++14 digit separators: 1'000'000
fn is_digit_separator(src: &[u8], i: usize) -> bool {
    i > 0
        && src[i - 1].is_ascii_alphanumeric()
        && src.get(i + 1).is_some_and(|c| c.is_ascii_alphanumeric())
        && {
            // walk back over the token; it must start with a digit
            let mut j = i;
            while j > 0 && (src[j - 1].is_ascii_alphanumeric() || src[j - 1] == b'\'') {
                j -= 1;
            }
            src[j].is_ascii_digit()
        }
}
