//! Per-program refinement: cleanup rules, then a compile-repair loop, then a
//! test-repair loop, all sharing one query budget.

mod archive;
mod baseline;
mod refine;

use std::io::{self, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use archive::Archive;
pub use baseline::run_baseline;
pub use refine::refine;

use crate::compilebox::{CompileError, CompilerConfig};
use crate::llm::{BackendError, PromptTemplates, Transcript};
use crate::preprocess::{SourceUnit, DEFAULT_HEADER_HINT};
use crate::runbox::{RunError, RunLimits, TestVerdict, VerdictStatus};

pub const DEFAULT_BUDGET: u32 = 15;
pub const DEFAULT_CONTEXT_LIMIT: usize = 4096;

/// Failures of the harness itself, as opposed to failures of the program
/// under repair (which are statuses).
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Compile(#[from] CompileError),

    #[error(transparent)]
    Run(#[from] RunError),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("prompt rendering failed: {0}")]
    Prompt(String),

    #[error("archive write failed for {path}: {source}")]
    Archive {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Maximum number of model queries per program.
    pub budget: u32,
    /// Optional cap on queries spent before the first successful compile.
    pub static_budget: Option<u32>,
    /// Query the model even when the preprocessed unit already compiles.
    pub always_refine: bool,
    pub context_limit: usize,
    pub sanitize: bool,
    pub error_context_lines: usize,
    pub error_context_max_chars: usize,
    /// Cap on program output quoted back in an output-mismatch prompt.
    pub quoted_output_max_chars: usize,
    /// Preamble the baseline prepends to cleaned units.
    pub header_hint: String,
    pub seed: u64,
    pub compiler: CompilerConfig,
    pub run_limits: RunLimits,
    pub prompts: PromptTemplates,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            budget: DEFAULT_BUDGET,
            static_budget: None,
            always_refine: false,
            context_limit: DEFAULT_CONTEXT_LIMIT,
            sanitize: true,
            error_context_lines: 1,
            error_context_max_chars: 4000,
            quoted_output_max_chars: 2000,
            header_hint: DEFAULT_HEADER_HINT.into(),
            seed: 0,
            compiler: CompilerConfig::default(),
            run_limits: RunLimits::default(),
            prompts: PromptTemplates::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeStatus {
    Functional,
    CompiledButFailing,
    CompileBudgetExhausted,
    Inadmissible,
    ContextOverflow,
    SanitizerUnfixed,
    /// Baseline only: the rule-fixed unit does not build.
    CompileFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevertEvent {
    pub iteration: u32,
    /// Functions that lost their body, or empty when the candidate could not
    /// be indexed at all.
    pub lost_functions: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RefinementOutcome {
    pub program_id: String,
    pub status: OutcomeStatus,
    pub queries_used: u32,
    /// Query ordinal at which the program first passed every test; 0 when
    /// it passed before any query.
    pub success_at: Option<u32>,
    pub final_unit: SourceUnit,
    pub transcript: Transcript,
    /// Every verdict from every test run, in order.
    pub verdict_log: Vec<TestVerdict>,
    /// Verdicts of the last test run only.
    pub final_verdicts: Vec<TestVerdict>,
    pub revert_events: Vec<RevertEvent>,
    pub sanitizer_triggered: bool,
}

impl RefinementOutcome {
    pub fn record(&self) -> OutcomeRecord {
        OutcomeRecord {
            program_id: self.program_id.clone(),
            status: self.status,
            queries_used: self.queries_used,
            success_at: self.success_at,
            revert_events: self.revert_events.len() as u32,
            history_truncations: self.transcript.truncations(),
            sanitizer_triggered: self.sanitizer_triggered,
            final_verdicts: self.final_verdicts.iter().map(|v| v.status).collect(),
            final_source_sha256: hex::encode(Sha256::digest(self.final_unit.code.as_bytes())),
        }
    }
}

/// One line of `outcomes.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub program_id: String,
    pub status: OutcomeStatus,
    pub queries_used: u32,
    pub success_at: Option<u32>,
    pub revert_events: u32,
    pub history_truncations: u32,
    pub sanitizer_triggered: bool,
    pub final_verdicts: Vec<VerdictStatus>,
    pub final_source_sha256: String,
}

pub fn write_record<W: Write>(mut w: W, record: &OutcomeRecord) -> io::Result<()> {
    serde_json::to_writer(&mut w, record)?;
    w.write_all(b"\n")
}

pub fn read_records(text: &str) -> Result<Vec<OutcomeRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
