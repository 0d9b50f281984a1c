use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{Archive, OutcomeStatus, PipelineConfig, PipelineError, RefinementOutcome, RevertEvent};
use crate::compilebox::{
    compile, render_error_context, strip_paths, CompileError, CompileRequest, Diagnostic, Severity,
};
use crate::corpus::{ByteRatioEstimator, ProgramEntry};
use crate::llm::{self, admit_with, extract_code, BackendError, CompletionBackend, LlmError, PromptKind, QueryKey, Transcript};
use crate::preprocess::{index_functions, Origin, Rules, SourceUnit};
use crate::runbox::{run_tests, RunOptions, TestVerdict, VerdictStatus};

/// Result of building and testing the accepted unit.
enum Eval {
    /// Built but deliberately not tested yet.
    Pending,
    CompileFailed(Vec<Diagnostic>),
    /// First non-passing verdict of the last run.
    Failing(TestVerdict),
    Pass,
}

struct Session<'a> {
    entry: &'a ProgramEntry,
    cfg: &'a PipelineConfig,
    archive: Archive,
    accepted: SourceUnit,
    verdict_log: Vec<TestVerdict>,
    final_verdicts: Vec<TestVerdict>,
    sanitizer_triggered: bool,
}

impl Session<'_> {
    fn evaluate(&mut self, k: u32, run: bool) -> Result<Eval, PipelineError> {
        let req = CompileRequest {
            unit: &self.accepted,
            sanitize: self.cfg.sanitize,
            extra_flags: Vec::new(),
            workdir: self.archive.work_dir(),
            time_limit_ms: self.cfg.compiler.timeout_ms,
            seed: self.cfg.seed,
        };
        let result = match compile(&self.cfg.compiler, &req) {
            Ok(r) => r,
            Err(CompileError::CompileTimeout(ms)) => {
                let msg = format!("compilation timed out after {ms} ms");
                self.archive.write(k, "compile.txt", &msg)?;
                return Ok(Eval::CompileFailed(vec![Diagnostic {
                    severity: Severity::Error,
                    message: msg,
                    line: None,
                    column: None,
                    excerpt: None,
                }]));
            }
            Err(e) => return Err(e.into()),
        };
        self.archive.write(k, "compile.txt", strip_paths(&result.raw_stderr))?;
        let binary = match (&result.binary_path, result.success) {
            (Some(b), true) => b.clone(),
            _ => return Ok(Eval::CompileFailed(result.diagnostics)),
        };
        if !run {
            return Ok(Eval::Pending);
        }

        let opts = RunOptions {
            limits: self.cfg.run_limits.clone(),
            scratch_dir: self.archive.work_dir().join("run"),
            report_dir: Some(self.archive.iter_dir(k)),
            source: &self.accepted.code,
            sanitized: self.cfg.sanitize,
            run_all: false,
        };
        let verdicts = run_tests(&binary, &self.entry.test_cases, &opts)?;
        let json = serde_json::to_string_pretty(&verdicts).expect("verdicts serialize");
        self.archive.write(k, "verdicts.json", json)?;
        self.sanitizer_triggered |= verdicts.iter().any(|v| v.status == VerdictStatus::SanitizerAbort);
        self.verdict_log.extend(verdicts.iter().cloned());
        self.final_verdicts = verdicts;
        Ok(match self.final_verdicts.iter().find(|v| v.status != VerdictStatus::Pass) {
            Some(v) => Eval::Failing(v.clone()),
            None => Eval::Pass,
        })
    }

    fn quote_output(&self, v: &TestVerdict) -> String {
        let max = self.cfg.quoted_output_max_chars;
        let mut out: String = v.actual_stdout.chars().take(max).collect();
        if v.stdout_truncated || v.actual_stdout.chars().nth(max).is_some() {
            out.push_str("\n[... truncated]");
        }
        out
    }

    fn prompt_slots(&self, eval: &Eval, initial: bool) -> (PromptKind, BTreeMap<String, String>) {
        let mut slots = BTreeMap::new();
        slots.insert("pseudocode".to_string(), self.accepted.code.clone());
        let kind = match eval {
            _ if initial => PromptKind::Initial,
            Eval::Pending | Eval::Pass => PromptKind::Initial,
            Eval::CompileFailed(diags) => {
                let mut context = render_error_context(
                    diags,
                    &self.accepted.code,
                    self.cfg.error_context_lines,
                    self.cfg.error_context_max_chars,
                );
                if context.is_empty() {
                    context = "error: compilation failed".to_string();
                }
                slots.insert("compiler_error".into(), context);
                PromptKind::CompileError
            }
            Eval::Failing(v) if v.status == VerdictStatus::SanitizerAbort => {
                let report = v.sanitizer.as_ref();
                slots.insert(
                    "type_of_memory_corruption".into(),
                    report.map_or("memory error".into(), |r| r.kind.clone()),
                );
                slots.insert(
                    "statement".into(),
                    report
                        .and_then(|r| r.faulting_statement.clone())
                        .unwrap_or_else(|| "the program".into()),
                );
                PromptKind::SanitizerError
            }
            Eval::Failing(v) => {
                let case = &self.entry.test_cases[v.case_index];
                let wrong = match v.status {
                    VerdictStatus::Timeout => format!("[program timed out after {} ms]", case.timeout_ms),
                    VerdictStatus::Crash => match (v.signal, v.exit_code) {
                        (Some(sig), _) => format!("[program crashed with signal {sig}]"),
                        (None, Some(code)) => format!("[program exited with status {code}]"),
                        (None, None) => "[program crashed]".into(),
                    },
                    _ => self.quote_output(v),
                };
                slots.insert("expected_input".into(), case.stdin_text.clone());
                slots.insert("expected_output".into(), case.expected_stdout.clone());
                slots.insert("wrong_output".into(), wrong);
                PromptKind::OutputError
            }
        };
        (kind, slots)
    }
}

/// Functions with a body in `prev` that are absent or bodiless in `candidate`.
/// `None` means the candidate is acceptable.
fn stripped_functions(prev: &SourceUnit, candidate: &str) -> Option<Vec<String>> {
    let before: BTreeSet<&str> = prev.bodied_functions().collect();
    if before.is_empty() {
        return None;
    }
    let Ok(index) = index_functions(candidate) else {
        return Some(Vec::new());
    };
    let after: BTreeSet<&str> = index
        .iter()
        .filter(|r| !r.body_is_empty_or_missing)
        .map(|r| r.name.as_str())
        .collect();
    let lost: Vec<String> = before.difference(&after).map(|s| s.to_string()).collect();
    (!lost.is_empty()).then_some(lost)
}

pub fn refine(
    entry: &ProgramEntry,
    rules: &Rules,
    backend: &dyn CompletionBackend,
    cfg: &PipelineConfig,
    run_dir: &Path,
) -> Result<RefinementOutcome, PipelineError> {
    let est = ByteRatioEstimator::default();
    let raw = SourceUnit::new(entry.id.clone(), entry.pseudocode.clone(), Origin::Decompiler);
    let mut s = Session {
        entry,
        cfg,
        archive: Archive::new(run_dir, &entry.id),
        accepted: rules.preprocess(&raw),
        verdict_log: Vec::new(),
        final_verdicts: Vec::new(),
        sanitizer_triggered: false,
    };
    s.archive.write(0, "candidate.c", &s.accepted.code)?;
    let mut transcript = Transcript::new(cfg.prompts.system_message());
    let mut reverts = Vec::new();
    let mut queries = 0u32;
    let mut success_at = None;

    let finish = |s: Session, status, queries, success_at, transcript, reverts| RefinementOutcome {
        program_id: entry.id.clone(),
        status,
        queries_used: queries,
        success_at,
        final_unit: s.accepted,
        transcript,
        verdict_log: s.verdict_log,
        final_verdicts: s.final_verdicts,
        revert_events: reverts,
        sanitizer_triggered: s.sanitizer_triggered,
    };

    if !admit_with(&s.accepted, &cfg.prompts.system, cfg.context_limit, &est) {
        tracing::info!(program = %entry.id, "inadmissible: exceeds half the context limit");
        return Ok(finish(s, OutcomeStatus::Inadmissible, 0, None, transcript, reverts));
    }

    let mut eval = s.evaluate(0, !cfg.always_refine)?;
    if let Eval::Pass = eval {
        return Ok(finish(s, OutcomeStatus::Functional, 0, Some(0), transcript, reverts));
    }
    let mut initial = matches!(eval, Eval::CompileFailed(_)) || cfg.always_refine;
    let mut compiled_once = matches!(eval, Eval::Failing(_) | Eval::Pending);
    let mut overflow = false;

    for k in 1..=cfg.budget {
        if !compiled_once && cfg.static_budget.is_some_and(|sb| k > sb) {
            break;
        }
        let (kind, slots) = s.prompt_slots(&eval, initial);
        initial = false;
        let prompt = cfg
            .prompts
            .render(kind, &slots)
            .map_err(|e| PipelineError::Prompt(e.to_string()))?;
        s.archive.write(k, "prompt.txt", &prompt.content)?;
        transcript.push(prompt);
        if 2 * transcript.window_tokens(&est) >= cfg.context_limit {
            transcript.truncate_history();
        }

        let reply = match llm::complete(&transcript, backend, &QueryKey::new(entry.id.clone(), k)) {
            Ok(r) => r,
            Err(LlmError::Backend(BackendError::ContextOverflow(msg))) => {
                tracing::warn!(program = %entry.id, query = k, "context overflow: {msg}");
                overflow = true;
                break;
            }
            Err(LlmError::Backend(e)) => return Err(e.into()),
            Err(e) => return Err(PipelineError::Prompt(e.to_string())),
        };
        s.archive.write(k, "response.txt", &reply.content)?;
        let response = reply.content.clone();
        transcript.push(reply);
        queries = k;

        let code = match extract_code(&response) {
            Ok(c) => c,
            Err(_) => {
                s.archive.write(k, "compile.txt", "no code found in response\n")?;
                continue;
            }
        };
        s.archive.write(k, "candidate.c", &code)?;
        if let Some(lost) = stripped_functions(&s.accepted, &code) {
            tracing::info!(program = %entry.id, query = k, ?lost, "candidate strips function bodies; reverting");
            s.archive.write(k, "revert.txt", lost.join("\n"))?;
            reverts.push(RevertEvent {
                iteration: k,
                lost_functions: lost,
            });
            continue;
        }
        s.accepted = s.accepted.with_code(code, Origin::LlmIteration(k));
        eval = s.evaluate(k, true)?;
        match eval {
            Eval::Pass => {
                success_at = Some(k);
                break;
            }
            Eval::Failing(_) => compiled_once = true,
            _ => {}
        }
    }

    let status = if overflow {
        OutcomeStatus::ContextOverflow
    } else {
        match &eval {
            Eval::Pass => OutcomeStatus::Functional,
            Eval::CompileFailed(_) => OutcomeStatus::CompileBudgetExhausted,
            Eval::Pending => OutcomeStatus::CompiledButFailing,
            Eval::Failing(v) if v.status == VerdictStatus::SanitizerAbort => OutcomeStatus::SanitizerUnfixed,
            Eval::Failing(_) => OutcomeStatus::CompiledButFailing,
        }
    };
    Ok(finish(s, status, queries, success_at, transcript, reverts))
}
