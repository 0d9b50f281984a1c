//! Deterministic cleanup of raw decompiler output and the rule-only baseline.
//!
//! All rules work on text, never on a syntax tree: the input is frequently
//! not valid C. Matching runs over a masked copy of the code (see [`mask`])
//! so that comments and literal contents never trigger a rule.

mod functions;
pub mod mask;
mod rules;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use functions::{index_functions, FunctionRecord};
pub use rules::Rules;

/// Include/using preamble used by the baseline when none is configured.
pub const DEFAULT_HEADER_HINT: &str = "#include <bits/stdc++.h>\nusing namespace std;";

const DEFAULT_RULES_JSON: &str = include_str!("../../rules/default_rules.json");

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("unbalanced braces near byte {offset}")]
    UnbalancedBraces { offset: usize },

    #[error("bad rule config: {0}")]
    Config(String),

    #[error("invalid pattern `{pattern}`: {source}")]
    Pattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Decompiler,
    Preprocessed,
    LlmIteration(u32),
    BaselineFixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub program_id: String,
    pub code: String,
    pub origin: Origin,
    /// Cache of `index_functions(code)`; empty when the scan fails.
    pub function_index: Vec<FunctionRecord>,
}

impl SourceUnit {
    pub fn new(program_id: impl Into<String>, code: impl Into<String>, origin: Origin) -> Self {
        let code = code.into();
        let function_index = index_functions(&code).unwrap_or_default();
        SourceUnit {
            program_id: program_id.into(),
            code,
            origin,
            function_index,
        }
    }

    pub fn with_code(&self, code: String, origin: Origin) -> Self {
        SourceUnit::new(self.program_id.clone(), code, origin)
    }

    /// Names of functions that currently have a non-empty body.
    pub fn bodied_functions(&self) -> impl Iterator<Item = &str> {
        self.function_index
            .iter()
            .filter(|r| !r.body_is_empty_or_missing)
            .map(|r| r.name.as_str())
    }
}

/// Rule configuration as stored on disk: three arrays of regular expressions
/// (ELF symbol names are matched literally as identifiers).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub elf_symbols: Vec<String>,
    pub calling_conventions: Vec<String>,
    pub canary_patterns: Vec<String>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_RULES_JSON).expect("embedded rule config is valid")
    }
}

impl RuleConfig {
    pub fn from_json(text: &str) -> Result<Self, PreprocessError> {
        serde_json::from_str(text).map_err(|e| PreprocessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PreprocessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl Rules {
    pub fn strip_elf_runtime_symbols(&self, unit: &SourceUnit) -> SourceUnit {
        unit.with_code(self.strip_elf_text(&unit.code), Origin::Preprocessed)
    }

    pub fn strip_security_checks(&self, unit: &SourceUnit) -> SourceUnit {
        unit.with_code(self.strip_canary_text(&unit.code), Origin::Preprocessed)
    }

    pub fn fix_declarations(&self, unit: &SourceUnit) -> SourceUnit {
        unit.with_code(self.fix_declarations_text(&unit.code), Origin::Preprocessed)
    }

    /// Cleanup rules applied before any LLM involvement.
    pub fn preprocess(&self, unit: &SourceUnit) -> SourceUnit {
        let code = self.fix_declarations_text(&self.strip_canary_text(&self.strip_elf_text(&unit.code)));
        unit.with_code(code, Origin::Preprocessed)
    }

    /// The complete rule-only baseline: cleanup rules, then the header hint.
    pub fn apply_decrule(&self, unit: &SourceUnit, header_hint: Option<&str>) -> SourceUnit {
        let mut code = self.preprocess(unit).code;
        if let Some(hint) = header_hint.filter(|h| !h.is_empty()) {
            let mut prefixed = String::with_capacity(hint.len() + code.len() + 1);
            prefixed.push_str(hint);
            if !hint.ends_with('\n') {
                prefixed.push('\n');
            }
            prefixed.push_str(&code);
            code = prefixed;
        }
        unit.with_code(code, Origin::BaselineFixed)
    }
}
