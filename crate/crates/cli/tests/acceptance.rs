//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recomp::compilebox::{compile, parse_diagnostics, CompileRequest, CompilerConfig, Severity};
use recomp::corpus::{load_manifest, Bucket, TokenEstimator, ProgramEntry, TestCase};
use recomp::llm::{admit, admit_with, PromptKind, PromptTemplates, ReplayBackend};
use recomp::metrics::{aggregate, DEFAULT_THRESHOLDS};
use recomp::pipeline::{read_records, refine, OutcomeRecord, OutcomeStatus, PipelineConfig};
use recomp::preprocess::{index_functions, Origin, RuleConfig, Rules, SourceUnit};
use recomp::runbox::{run_tests, RunLimits, RunOptions, VerdictStatus};
use regex::Regex;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn manifest() -> PathBuf {
    root().join("corpus/synthetic/manifest.json")
}

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["recomp"];
    argv.extend_from_slice(args);
    recomp_cli::run(argv)
}

fn outcomes(out: &Path) -> Vec<OutcomeRecord> {
    read_records(&fs::read_to_string(out.join("outcomes.jsonl")).unwrap()).unwrap()
}

fn replay_run(out: &Path, fixtures: &Path, budget: u32) {
    let code = cli(&[
        "refine",
        "--manifest",
        manifest().to_str().unwrap(),
        "--backend",
        "replay",
        "--fixtures",
        fixtures.to_str().unwrap(),
        "--budget",
        &budget.to_string(),
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    assert_eq!(code, 0, "refine exited {code}");
}

fn criterion_1() {
    let tmp = tempfile::tempdir().unwrap();
    let fixtures = root().join("corpus/synthetic/fixtures");
    let start = Instant::now();
    replay_run(&tmp.path().join("a"), &fixtures, 5);
    replay_run(&tmp.path().join("b"), &fixtures, 5);
    let elapsed = start.elapsed();
    let a = fs::read(tmp.path().join("a/outcomes.jsonl")).unwrap();
    let b = fs::read(tmp.path().join("b/outcomes.jsonl")).unwrap();
    assert!(a == b, "outcomes differ between runs");
    let recs = outcomes(&tmp.path().join("a"));
    assert!(recs.len() >= 10, "corpus has {} programs", recs.len());
    let ok = recs.iter().filter(|r| r.status == OutcomeStatus::Functional).count();
    assert!(ok * 10 >= recs.len() * 9, "{ok}/{} functional", recs.len());
    assert!(recs.iter().all(|r| r.queries_used <= 5));
    assert!(elapsed < Duration::from_secs(240), "two runs took {elapsed:?}");
}

fn criterion_2() {
    let ids: Vec<String> = load_manifest(&manifest()).unwrap().into_iter().map(|e| e.id).collect();
    let tmp = tempfile::tempdir().unwrap();
    let fx = tmp.path().join("fx");
    for id in &ids {
        fs::create_dir_all(fx.join(id)).unwrap();
        for n in 1..=15 {
            let body = format!("```cpp\nint main() {{ return undeclared_{n}; }}\n```\n");
            fs::write(fx.join(id).join(format!("{n}.txt")), body).unwrap();
        }
    }
    for budget in [1u32, 5, 15] {
        let out = tmp.path().join(format!("out{budget}"));
        replay_run(&out, &fx, budget);
        let recs = outcomes(&out);
        assert_eq!(recs.len(), ids.len());
        for r in recs {
            assert_eq!(r.queries_used, budget, "{} at budget {budget}", r.program_id);
            assert_eq!(r.status, OutcomeStatus::CompileBudgetExhausted, "{}", r.program_id);
        }
    }
}

fn criterion_3() {
    let entry = load_manifest(&manifest())
        .unwrap()
        .into_iter()
        .find(|e| e.id == "p09_strip_body")
        .unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let backend = ReplayBackend::new(root().join("corpus/synthetic/fixtures"));
    let rules = Rules::new(&RuleConfig::default()).unwrap();
    let cfg = PipelineConfig {
        budget: 5,
        ..PipelineConfig::default()
    };
    let o = refine(&entry, &rules, &backend, &cfg, tmp.path()).unwrap();
    assert!(!o.revert_events.is_empty(), "no revert logged");
    let ev = &o.revert_events[0];
    assert!(ev.lost_functions.iter().any(|f| f == "solve"), "{:?}", ev.lost_functions);
    let revert_file = tmp.path().join(format!("p09_strip_body/iter{}/revert.txt", ev.iteration));
    assert!(revert_file.is_file());
    let solve = index_functions(&o.final_unit.code)
        .unwrap()
        .into_iter()
        .find(|f| f.name == "solve")
        .expect("solve survives");
    assert!(!solve.body_is_empty_or_missing);
    // the response that stripped solve never became the accepted unit
    let stripped = fs::read_to_string(tmp.path().join(format!("p09_strip_body/iter{}/candidate.c", ev.iteration))).unwrap();
    assert_ne!(stripped, o.final_unit.code);
}

fn rule_inputs() -> Vec<(String, String)> {
    let dirs = [
        root().join("corpus/synthetic/pseudocode"),
        root().join("crates/core/tests/data/diagnostics"),
        root().join("crates/core/tests/data/asan"),
    ];
    let mut out = Vec::new();
    for d in dirs {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "c" || x == "cpp") {
                out.push((p.display().to_string(), fs::read_to_string(&p).unwrap()));
            }
        }
    }
    out
}

fn criterion_4() {
    let r = Rules::new(&RuleConfig::default()).unwrap();
    let fs_: [fn(&Rules, &SourceUnit) -> SourceUnit; 3] =
        [Rules::strip_elf_runtime_symbols, Rules::strip_security_checks, Rules::fix_declarations];
    let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let inputs = rule_inputs();
    assert!(inputs.len() >= 20);
    let mut changed = 0;
    for (name, code) in inputs {
        let u = SourceUnit::new("t", code.clone(), Origin::Decompiler);
        for (i, f) in fs_.iter().enumerate() {
            let once = f(&r, &u);
            assert_eq!(once.code, f(&r, &once).code, "rule {i} not idempotent on {name}");
        }
        let reference = orders[0].iter().fold(u.clone(), |acc, &i| fs_[i](&r, &acc)).code;
        for ord in &orders[1..] {
            let out = ord.iter().fold(u.clone(), |acc, &i| fs_[i](&r, &acc)).code;
            assert_eq!(out, reference, "order {ord:?} differs on {name}");
        }
        changed += usize::from(reference != code);
    }
    // the corpus actually exercises the rules
    assert!(changed >= 5, "only {changed} inputs changed");
}

fn criterion_5() {
    let dir = root().join("crates/core/tests/data/diagnostics");
    let located = Regex::new(r"^\S+?:(\d+):(?:\d+:)?\s*(?:fatal )?error: (.*)$").unwrap();
    let tool = Regex::new(r"^[^\s:/]+: (?:fatal )?error: (.*)$").unwrap();
    let mut files = 0;
    for e in fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_none_or(|x| x != "stderr") {
            continue;
        }
        files += 1;
        let stderr = fs::read_to_string(&p).unwrap();
        let diags = parse_diagnostics(&stderr);
        let want: Vec<String> = stderr
            .lines()
            .filter_map(|l| {
                located
                    .captures(l)
                    .map(|c| c[2].to_string())
                    .or_else(|| tool.captures(l).map(|c| c[1].to_string()))
            })
            .collect();
        assert!(!want.is_empty(), "{}", p.display());
        let mut it = diags.iter().filter(|d| d.severity == Severity::Error);
        for msg in want {
            assert!(it.any(|d| d.message.starts_with(&msg)), "{}: missing {msg}", p.display());
        }
        for d in &diags {
            assert!(!d.message.contains("/tmp/"), "{}: {}", p.display(), d.message);
        }
    }
    assert!(files >= 15, "only {files} golden files");
}

fn criterion_6() {
    let tmp = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(root().join("crates/core/tests/data/asan/heap_overflow.cpp")).unwrap();
    // the write in the `<=` loop is the offending line
    let lines: Vec<&str> = src.lines().collect();
    let loop_at = lines.iter().position(|l| l.contains("<= n")).unwrap();
    let offending = lines[loop_at + 1].trim();

    let unit = SourceUnit::new("heap", src.clone(), Origin::Preprocessed);
    let req = CompileRequest {
        unit: &unit,
        sanitize: true,
        extra_flags: vec![],
        workdir: tmp.path().to_path_buf(),
        time_limit_ms: 60_000,
        seed: 1,
    };
    let built = compile(&CompilerConfig::default(), &req).unwrap();
    assert!(built.success, "{}", built.raw_stderr);
    let opts = RunOptions {
        limits: RunLimits::default(),
        scratch_dir: tmp.path().join("run"),
        report_dir: None,
        source: &src,
        sanitized: true,
        run_all: false,
    };
    let v = run_tests(built.binary_path.as_ref().unwrap(), &[TestCase::new("4\n", "9\n")], &opts).unwrap();
    assert_eq!(v[0].status, VerdictStatus::SanitizerAbort);
    let report = v[0].sanitizer.as_ref().unwrap();
    assert_eq!(report.kind, "heap-buffer-overflow");
    assert_eq!(report.faulting_statement.as_deref(), Some(offending));

    let slots = BTreeMap::from([
        ("type_of_memory_corruption".to_string(), report.kind.clone()),
        ("statement".to_string(), offending.to_string()),
        ("pseudocode".to_string(), src),
    ]);
    let prompt = PromptTemplates::default().render(PromptKind::SanitizerError, &slots).unwrap();
    assert!(prompt.content.starts_with("Please fix the heap-buffer-overflow triggered in"));
}

fn record(id: &str, success_at: Option<u32>) -> OutcomeRecord {
    OutcomeRecord {
        program_id: id.into(),
        status: if success_at.is_some() {
            OutcomeStatus::Functional
        } else {
            OutcomeStatus::CompileBudgetExhausted
        },
        queries_used: success_at.unwrap_or(15),
        success_at,
        revert_events: 0,
        history_truncations: 0,
        sanitizer_triggered: false,
        final_verdicts: vec![],
        final_source_sha256: String::new(),
    }
}

fn rates(v: &[Option<u32>], thresholds: &[u32]) -> Vec<(usize, f64)> {
    let recs: Vec<_> = v.iter().enumerate().map(|(i, s)| record(&format!("p{i}"), *s)).collect();
    let entries: Vec<_> = (0..v.len())
        .map(|i| {
            let mut e = ProgramEntry::from_source(format!("p{i}"), "int main(){}");
            e.bucket = Bucket::Index(0);
            e
        })
        .collect();
    aggregate(&recs, &entries, thresholds)
        .unwrap()
        .success_at_c
        .values()
        .map(|r| (r.count, r.rate))
        .collect()
}

fn criterion_7() {
    let got: Vec<f64> = rates(&[Some(1), Some(4), Some(12), None], &DEFAULT_THRESHOLDS)
        .into_iter()
        .map(|x| x.1)
        .collect();
    assert_eq!(got, [0.25, 0.50, 0.50, 0.75]);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let thresholds = [1, 2, 3, 5, 8, 10, 15, 20];
    for _ in 0..1000 {
        let n = rng.gen_range(1..50);
        let v: Vec<Option<u32>> = (0..n)
            .map(|_| rng.gen_bool(0.7).then(|| rng.gen_range(0..=20)))
            .collect();
        let r = rates(&v, &thresholds);
        assert!(r.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1), "{v:?}");
        // independent count for each threshold
        for (&c, (count, _)) in thresholds.iter().zip(&r) {
            assert_eq!(*count, v.iter().filter(|s| s.is_some_and(|s| s <= c)).count());
        }
    }
}

struct Bytes;
impl TokenEstimator for Bytes {
    fn estimate(&self, text: &str) -> usize {
        text.len()
    }
}

fn criterion_8() {
    let unit = |n: usize| SourceUnit::new("t", "x".repeat(n), Origin::Preprocessed);
    let prompt = "y".repeat(47);
    assert!(admit_with(&unit(2000), &prompt, 4096, &Bytes));
    assert!(!admit_with(&unit(2001), &prompt, 4096, &Bytes));
    // same boundary under the default 4-bytes-per-token estimate
    let prompt = "y".repeat(4 * 47);
    assert!(admit(&unit(4 * 2000), &prompt, 4096));
    assert!(!admit(&unit(4 * 2000 + 1), &prompt, 4096));
}

fn criterion_9() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bl");
    let code = cli(&[
        "baseline",
        "--manifest",
        manifest().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let fixed: Vec<String> = outcomes(&out)
        .into_iter()
        .inspect(|r| assert_eq!(r.queries_used, 0))
        .filter(|r| r.status == OutcomeStatus::Functional)
        .map(|r| r.program_id)
        .collect();
    assert_eq!(fixed, ["p01_elf_init", "p02_canary", "p03_fastcall"]);
}

fn main() {
    let criteria: [(u32, fn()); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut results = Vec::new();
    for (n, f) in criteria {
        let res = panic::catch_unwind(AssertUnwindSafe(f));
        let detail = res.err().map(|e| {
            e.downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        });
        results.push((n, detail));
    }
    let _ = panic::take_hook();
    let mut failed = 0;
    for (n, detail) in &results {
        match detail {
            None => println!("criterion {n}: PASS"),
            Some(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL ({msg})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
