//! End-to-end refinement runs against scripted model responses.

use std::fs;
use std::path::Path;

use recomp::corpus::{ProgramEntry, TestCase};
use recomp::llm::{ReplayBackend, Role};
use recomp::pipeline::{refine, OutcomeStatus, PipelineConfig};
use recomp::preprocess::{RuleConfig, Rules};

const SUM_PSEUDO: &str = "\
__int64 __fastcall main(int a1, char **a2, char **a3)
{
  int n; // [rsp+0h] [rbp-10h] BYREF
  int i;
  __int64 s;

  scanf(\"%d\", &n);
  s = 0LL;
  for ( i = 1; i <= n; ++i )
    s += i;
  printf(\"%lld\\n\", s)
  return 0LL;
}
";

const SUM_OK: &str = "```cpp
#include <cstdio>
int main() {
  int n;
  scanf(\"%d\", &n);
  long long s = 0;
  for (int i = 1; i <= n; ++i) s += i;
  printf(\"%lld\\n\", s);
  return 0;
}
```";

fn entry(id: &str, code: &str) -> ProgramEntry {
    let mut e = ProgramEntry::from_source(id, code);
    e.test_cases = vec![TestCase::new("4\n", "10\n"), TestCase::new("1\n", "1\n")];
    e
}

fn fixtures(dir: &Path, id: &str, responses: &[&str]) {
    let d = dir.join(id);
    fs::create_dir_all(&d).unwrap();
    for (i, r) in responses.iter().enumerate() {
        fs::write(d.join(format!("{}.txt", i + 1)), r).unwrap();
    }
}

fn cfg(budget: u32) -> PipelineConfig {
    PipelineConfig {
        budget,
        ..PipelineConfig::default()
    }
}

fn rules() -> Rules {
    Rules::new(&RuleConfig::default()).unwrap()
}

struct Run {
    outcome: recomp::pipeline::RefinementOutcome,
    tmp: tempfile::TempDir,
}

fn run(id: &str, code: &str, responses: &[&str], cfg: PipelineConfig) -> Run {
    let tmp = tempfile::tempdir().unwrap();
    let fx = tmp.path().join("fx");
    fixtures(&fx, id, responses);
    let out = tmp.path().join("out");
    let outcome = refine(&entry(id, code), &rules(), &ReplayBackend::new(&fx), &cfg, &out).unwrap();
    Run { outcome, tmp }
}

fn user_prompts(o: &recomp::pipeline::RefinementOutcome) -> Vec<String> {
    o.transcript
        .messages()
        .iter()
        .filter(|m| m.role == Role::User)
        .map(|m| m.content.clone())
        .collect()
}

#[test]
fn first_response_fixes_the_program() {
    let r = run("sum", SUM_PSEUDO, &[SUM_OK], cfg(5));
    assert_eq!(r.outcome.status, OutcomeStatus::Functional);
    assert_eq!(r.outcome.success_at, Some(1));
    assert_eq!(r.outcome.queries_used, 1);
    // the unit never compiled, so the first prompt is the plain one
    let prompts = user_prompts(&r.outcome);
    assert!(prompts[0].starts_with("```cpp\n"), "{}", prompts[0]);
}

#[test]
fn compile_fix_then_output_fix() {
    let missing_header = "```cpp\nint main() { int n; scanf(\"%d\", &n); printf(\"%d\\n\", n); return 0; }\n```";
    let wrong = "```cpp\n#include <cstdio>\nint main() { int n; scanf(\"%d\", &n); printf(\"%d\\n\", n); return 0; }\n```";
    let r = run("two", SUM_PSEUDO, &[missing_header, wrong, SUM_OK], cfg(5));
    assert_eq!(r.outcome.status, OutcomeStatus::Functional);
    assert_eq!(r.outcome.success_at, Some(3));
    let prompts = user_prompts(&r.outcome);
    assert!(prompts[1].starts_with("Please fix the following compilation errors"));
    assert!(prompts[1].contains("scanf"));
    assert!(prompts[2].starts_with("The expected output of the program for input:"));
    assert!(prompts[2].contains("\n10\n"), "{}", prompts[2]);
    assert!(prompts[2].contains("but we got\n```\n4\n```"), "{}", prompts[2]);
}

#[test]
fn budget_is_exhausted_exactly() {
    let bad = "```cpp\nint main() { return x; }\n```";
    let r = run("bad", SUM_PSEUDO, &[bad, bad, bad, bad], cfg(3));
    assert_eq!(r.outcome.status, OutcomeStatus::CompileBudgetExhausted);
    assert_eq!(r.outcome.queries_used, 3);
    assert_eq!(r.outcome.success_at, None);
    assert_eq!(r.outcome.transcript.total_queries(), 3);
}

#[test]
fn archive_has_one_directory_per_query() {
    let bad = "```cpp\nint main() { return x; }\n```";
    let r = run("arch", SUM_PSEUDO, &[bad, bad, SUM_OK], cfg(5));
    let root = r.tmp.path().join("out/arch");
    assert!(root.join("iter0/candidate.c").is_file());
    for k in 1..=3 {
        for f in ["prompt.txt", "response.txt", "candidate.c", "compile.txt"] {
            assert!(root.join(format!("iter{k}/{f}")).is_file(), "iter{k}/{f}");
        }
    }
    assert!(root.join("iter3/verdicts.json").is_file());
    assert!(!root.join("iter4").exists());
}

#[test]
fn stripped_body_is_reverted() {
    let pseudo = "\
int __fastcall solve(int a1)
{
  return a1 + a1;
}

int __fastcall main(int argc, const char **argv, const char **envp)
{
  int n;
  scanf(\"%d\", &n)
  printf(\"%d\\n\", solve(n));
  return 0;
}
";
    let stripped = "```cpp\n#include <cstdio>\nint solve(int a1);\nint main() { int n; scanf(\"%d\", &n); printf(\"%d\\n\", solve(n)); return 0; }\n```";
    let full = "```cpp\n#include <cstdio>\nint solve(int a1) { return a1 + a1 + 2; }\nint main() { int n; scanf(\"%d\", &n); printf(\"%d\\n\", solve(n)); return 0; }\n```";
    let mut e = entry("strip", pseudo);
    e.test_cases = vec![TestCase::new("4\n", "10\n")];
    let tmp = tempfile::tempdir().unwrap();
    fixtures(&tmp.path().join("fx"), "strip", &[stripped, full]);
    let o = refine(&e, &rules(), &ReplayBackend::new(tmp.path().join("fx")), &cfg(5), &tmp.path().join("out")).unwrap();
    assert_eq!(o.status, OutcomeStatus::Functional);
    assert_eq!(o.success_at, Some(2));
    assert_eq!(o.revert_events.len(), 1);
    assert_eq!(o.revert_events[0].iteration, 1);
    assert_eq!(o.revert_events[0].lost_functions, ["solve"]);
    assert!(o.final_unit.code.contains("return a1 + a1 + 2;"));
    assert!(tmp.path().join("out/strip/iter1/revert.txt").is_file());
    let prompts = user_prompts(&o);
    // the rejected candidate is not fed back; the unit that failed is
    assert!(prompts[1].contains("scanf(\"%d\", &n)\n"), "{}", prompts[1]);
}

#[test]
fn prose_only_reply_costs_a_query() {
    let prose = "I think the issue is the missing semicolon after scanf.";
    let r = run("prose", SUM_PSEUDO, &[prose, SUM_OK], cfg(5));
    assert_eq!(r.outcome.status, OutcomeStatus::Functional);
    assert_eq!(r.outcome.success_at, Some(2));
    let text = fs::read_to_string(r.tmp.path().join("out/prose/iter1/compile.txt")).unwrap();
    assert!(text.contains("no code found"));
}

#[test]
fn sanitizer_prompt_names_kind_and_statement() {
    let pseudo = "\
int __fastcall main(int argc, const char **argv, const char **envp)
{
  int n;
  int i;
  __int64 sum;
  _DWORD *v;

  scanf(\"%d\", &n);
  v = malloc(4LL * n);
  for ( i = 0; i <= n; ++i )
    v[i] = i * i;
  sum = 0LL;
  for ( i = 0; i < n; ++i )
    sum += (int)v[i];
  printf(\"%lld\\n\", sum);
  free(v);
  return 0;
}
";
    let overflow = "```cpp
#include <cstdio>
#include <cstdlib>
int main()
{
  int n;
  scanf(\"%d\", &n);
  int *v = (int *)malloc(sizeof(int) * n);
  for (int i = 0; i <= n; ++i)
    v[i] = i * i;
  long long sum = 0;
  for (int i = 0; i < n; ++i)
    sum += v[i];
  printf(\"%lld\\n\", sum);
  free(v);
  return 0;
}
```";
    let fixed = overflow.replace("i <= n", "i < n");
    let mut e = entry("asan", pseudo);
    e.test_cases = vec![TestCase::new("4\n", "14\n")];
    let tmp = tempfile::tempdir().unwrap();
    fixtures(&tmp.path().join("fx"), "asan", &[overflow, &fixed]);
    let o = refine(&e, &rules(), &ReplayBackend::new(tmp.path().join("fx")), &cfg(5), &tmp.path().join("out")).unwrap();
    assert_eq!(o.status, OutcomeStatus::Functional);
    assert_eq!(o.success_at, Some(2));
    assert!(o.sanitizer_triggered);
    let prompts = user_prompts(&o);
    assert!(
        prompts[1].starts_with("Please fix the heap-buffer-overflow triggered in v[i] = i * i;:"),
        "{}",
        prompts[1]
    );
}

#[test]
fn sanitizer_without_statement_still_prompts() {
    // overflow inside libc: no source frame to name
    let pseudo = "int main() { char b[4]; memset(b, 0, 64); puts(\"x\"); return 0 }";
    let body = "```cpp\n#include <cstdio>\n#include <cstring>\nint main() { char *b = new char[4]; memset(b, 0, 64); puts(\"x\"); delete[] b; return 0; }\n```";
    let fixed = "```cpp\n#include <cstdio>\nint main() { puts(\"x\"); return 0; }\n```";
    let mut e = entry("libc", pseudo);
    e.test_cases = vec![TestCase::new("", "x\n")];
    let tmp = tempfile::tempdir().unwrap();
    fixtures(&tmp.path().join("fx"), "libc", &[body, fixed]);
    let o = refine(&e, &rules(), &ReplayBackend::new(tmp.path().join("fx")), &cfg(5), &tmp.path().join("out")).unwrap();
    assert_eq!(o.status, OutcomeStatus::Functional);
    let prompts = user_prompts(&o);
    assert!(prompts[1].starts_with("Please fix the heap-buffer-overflow triggered in "), "{}", prompts[1]);
}

#[test]
fn preprocessing_alone_can_succeed() {
    let pseudo = "#include <cstdio>\nint main() { int n; scanf(\"%d\", &n); printf(\"%d\\n\", n * (n + 1) / 2); return 0; }\n";
    let r = run("free", pseudo, &[], cfg(5));
    assert_eq!(r.outcome.status, OutcomeStatus::Functional);
    assert_eq!(r.outcome.success_at, Some(0));
    assert_eq!(r.outcome.queries_used, 0);
}

#[test]
fn always_refine_queries_even_when_clean() {
    let pseudo = "#include <cstdio>\nint main() { int n; scanf(\"%d\", &n); printf(\"%d\\n\", n * (n + 1) / 2); return 0; }\n";
    let mut c = cfg(5);
    c.always_refine = true;
    let r = run("always", pseudo, &[SUM_OK], c);
    assert_eq!(r.outcome.success_at, Some(1));
    assert!(user_prompts(&r.outcome)[0].starts_with("```cpp\n"));
}

#[test]
fn oversized_program_is_not_queried() {
    let big = format!("int main() {{\n{}}}\n", "  puts(\"padding padding padding\");\n".repeat(200));
    let mut c = cfg(5);
    c.context_limit = 512;
    let r = run("big", &big, &[], c);
    assert_eq!(r.outcome.status, OutcomeStatus::Inadmissible);
    assert_eq!(r.outcome.queries_used, 0);
}

#[test]
fn exhausted_fixtures_are_an_infrastructure_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("fx")).unwrap();
    let err = refine(
        &entry("none", SUM_PSEUDO),
        &rules(),
        &ReplayBackend::new(tmp.path().join("fx")),
        &cfg(3),
        &tmp.path().join("out"),
    );
    assert!(err.is_err());
}
