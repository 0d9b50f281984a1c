use std::fs;
use std::path::PathBuf;

use recomp::compilebox::{parse_diagnostics, parse_stderr, render_error_context, Severity};
use regex::Regex;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/diagnostics")
}

fn golden_cases() -> Vec<(String, String, String)> {
    let mut cases: Vec<_> = fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "stderr"))
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let stderr = fs::read_to_string(&p).unwrap();
            let code = fs::read_to_string(p.with_extension("cpp")).unwrap();
            (name, stderr, code)
        })
        .collect();
    cases.sort();
    cases
}

/// `(line, message)` for every error line, found by a plain line regex.
fn oracle_errors(stderr: &str) -> Vec<(Option<u32>, String)> {
    let located = Regex::new(r"^\S+?:(\d+):(?:\d+:)?\s*(?:fatal )?error: (.*)$").unwrap();
    let tool = Regex::new(r"^[^\s:/]+: (?:fatal )?error: (.*)$").unwrap();
    stderr
        .lines()
        .filter_map(|l| {
            if let Some(c) = located.captures(l) {
                Some((c[1].parse().ok(), c[2].to_string()))
            } else {
                tool.captures(l).map(|c| (None, c[1].to_string()))
            }
        })
        .collect()
}

#[test]
fn corpus_is_large_enough() {
    assert!(golden_cases().len() >= 15);
}

#[test]
fn every_error_line_is_extracted() {
    for (name, stderr, _) in golden_cases() {
        let diags = parse_diagnostics(&stderr);
        let errors: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
        let want = oracle_errors(&stderr);
        assert!(!want.is_empty(), "{name}: golden file has no error line");
        let mut it = errors.iter();
        for (line, msg) in &want {
            let found = it.by_ref().any(|d| d.line == *line && d.message.starts_with(msg.as_str()));
            assert!(found, "{name}: no diagnostic for error at {line:?}: {msg}");
        }
    }
}

#[test]
fn no_scratch_paths_survive() {
    for (name, stderr, code) in golden_cases() {
        for d in parse_diagnostics(&stderr) {
            assert!(!d.message.contains("/tmp/recomp-golden"), "{name}: {}", d.message);
            assert!(!d.message.contains("cc-"), "{name}: {}", d.message);
            if let Some(x) = &d.excerpt {
                assert!(!x.contains("/tmp/recomp-golden"), "{name}: {x}");
            }
        }
        let ctx = render_error_context(&parse_diagnostics(&stderr), &code, 1, 4000);
        assert!(!ctx.contains("/tmp/recomp-golden"), "{name}");
        assert!(!ctx.contains("cc-5f3a9c1e") && !ctx.contains("cc-77e01b2d"), "{name}");
    }
}

#[test]
fn context_headers_and_summaries_are_not_diagnostics() {
    for (name, stderr, _) in golden_cases() {
        for d in parse_diagnostics(&stderr) {
            assert!(!d.message.starts_with("In function"), "{name}: {}", d.message);
            assert!(!d.message.ends_with("generated."), "{name}: {}", d.message);
        }
    }
}

#[test]
fn warnings_are_kept_apart_from_errors() {
    let (_, stderr, _) = golden_cases()
        .into_iter()
        .find(|(n, _, _)| n == "15_warnings_only_plus_error")
        .unwrap();
    let diags = parse_diagnostics(&stderr);
    assert_eq!(diags.iter().filter(|d| d.severity == Severity::Error).count(), 1);
    assert_eq!(diags.iter().filter(|d| d.severity == Severity::Warning).count(), 2);
}

#[test]
fn linker_failures_are_errors() {
    let (_, stderr, _) = golden_cases()
        .into_iter()
        .find(|(n, _, _)| n == "04_undefined_reference")
        .unwrap();
    let parsed = parse_stderr(&stderr);
    assert!(parsed
        .diagnostics
        .iter()
        .any(|d| d.severity == Severity::Error && d.message.contains("undefined reference")));
}

#[test]
fn fixit_lines_stay_out_of_messages() {
    let stderr = "\
/w/cc-1/candidate.cpp: In function 'long long int count_vowels(const char*)':
/w/cc-1/candidate.cpp:8:9: error: 'strchr' was not declared in this scope
    8 |     if (strchr(\"aeiouAEIOU\", *p))
      |         ^~~~~~
/w/cc-1/candidate.cpp:2:1: note: 'strchr' is defined in header '<cstring>'; did you forget to '#include <cstring>'?
    1 | #include <cstdio>
  +++ |+#include <cstring>
    2 |
";
    let diags = parse_diagnostics(stderr);
    assert_eq!(diags.len(), 1);
    assert!(diags[0].message.starts_with("'strchr' was not declared in this scope"));
    assert!(diags[0].message.contains("did you forget to '#include <cstring>'?"));
    assert!(!diags[0].message.contains("+++"));
}
