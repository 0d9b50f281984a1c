use std::path::Path;

use super::{Archive, OutcomeStatus, PipelineConfig, PipelineError, RefinementOutcome};
use crate::compilebox::{compile, strip_paths, CompileError, CompileRequest};
use crate::corpus::ProgramEntry;
use crate::llm::Transcript;
use crate::preprocess::{Origin, Rules, SourceUnit};
use crate::runbox::{run_tests, RunOptions, VerdictStatus};

/// Rule-only comparator: cleanup rules plus the header hint, one build
/// without sanitizer, one test run. Never queries a model.
pub fn run_baseline(
    entry: &ProgramEntry,
    rules: &Rules,
    cfg: &PipelineConfig,
    run_dir: &Path,
) -> Result<RefinementOutcome, PipelineError> {
    let archive = Archive::new(run_dir, &entry.id);
    let raw = SourceUnit::new(entry.id.clone(), entry.pseudocode.clone(), Origin::Decompiler);
    let unit = rules.apply_decrule(&raw, Some(&cfg.header_hint));
    archive.write(0, "candidate.c", &unit.code)?;

    let req = CompileRequest {
        unit: &unit,
        sanitize: false,
        extra_flags: Vec::new(),
        workdir: archive.work_dir(),
        time_limit_ms: cfg.compiler.timeout_ms,
        seed: cfg.seed,
    };
    let built = match compile(&cfg.compiler, &req) {
        Ok(r) => {
            archive.write(0, "compile.txt", strip_paths(&r.raw_stderr))?;
            r.success.then_some(r.binary_path).flatten()
        }
        Err(CompileError::CompileTimeout(ms)) => {
            archive.write(0, "compile.txt", format!("compilation timed out after {ms} ms\n"))?;
            None
        }
        Err(e) => return Err(e.into()),
    };

    let mut verdicts = Vec::new();
    let status = match built {
        None => OutcomeStatus::CompileFailed,
        Some(binary) => {
            let opts = RunOptions {
                limits: cfg.run_limits.clone(),
                scratch_dir: archive.work_dir().join("run"),
                report_dir: None,
                source: &unit.code,
                sanitized: false,
                run_all: false,
            };
            verdicts = run_tests(&binary, &entry.test_cases, &opts)?;
            let json = serde_json::to_string_pretty(&verdicts).expect("verdicts serialize");
            archive.write(0, "verdicts.json", json)?;
            if verdicts.iter().all(|v| v.status == VerdictStatus::Pass) {
                OutcomeStatus::Functional
            } else {
                OutcomeStatus::CompiledButFailing
            }
        }
    };

    Ok(RefinementOutcome {
        program_id: entry.id.clone(),
        status,
        queries_used: 0,
        success_at: (status == OutcomeStatus::Functional).then_some(0),
        final_unit: unit,
        transcript: Transcript::new(cfg.prompts.system_message()),
        verdict_log: verdicts.clone(),
        final_verdicts: verdicts,
        revert_events: Vec::new(),
        sanitizer_triggered: false,
    })
}
