use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::{ChatMessage, LlmError, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptKind {
    Initial,
    CompileError,
    OutputError,
    SanitizerError,
}

pub const SYSTEM_PROMPT: &str = "Generate linux compilable C++ code of the main and other functions in the supplied snippet without using goto, fix any missing headers and reducing the number of intermediate variable. Only reply the fixed source code. Do not explain anything and include any extra instructions, only print the fixed source code.";

/// Slots whose values are multi-line program text or I/O and are therefore
/// rendered as fenced blocks. Everything else is substituted inline.
const FENCED_SLOTS: &[&str] = &["pseudocode", "expected_input", "expected_output", "wrong_output"];

/// The system prompt plus one user template per [`PromptKind`]. Placeholders
/// are `{slot_name}`; every placeholder present in a template is required.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplates {
    pub system: String,
    pub initial: String,
    pub compile_error: String,
    pub output_error: String,
    pub sanitizer_error: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            system: SYSTEM_PROMPT.into(),
            initial: "{pseudocode}".into(),
            compile_error: "Please fix the following compilation errors in the source code:\n{compiler_error}\n{pseudocode}".into(),
            output_error: "The expected output of the program for input:\n{expected_input}\nis\n{expected_output}\nbut we got\n{wrong_output}\nPlease fix the issue in the source code:\n{pseudocode}".into(),
            sanitizer_error: "Please fix the {type_of_memory_corruption} triggered in {statement}:\n{pseudocode}".into(),
        }
    }
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());

impl PromptTemplates {
    pub fn template(&self, kind: PromptKind) -> &str {
        match kind {
            PromptKind::Initial => &self.initial,
            PromptKind::CompileError => &self.compile_error,
            PromptKind::OutputError => &self.output_error,
            PromptKind::SanitizerError => &self.sanitizer_error,
        }
    }

    pub fn required_slots(&self, kind: PromptKind) -> Vec<String> {
        PLACEHOLDER
            .captures_iter(self.template(kind))
            .map(|c| c[1].to_string())
            .collect()
    }

    pub fn system_message(&self) -> ChatMessage {
        ChatMessage::new(Role::System, self.system.clone())
    }

    pub fn render(&self, kind: PromptKind, slots: &BTreeMap<String, String>) -> Result<ChatMessage, LlmError> {
        let template = self.template(kind);
        if let Some(missing) = self.required_slots(kind).into_iter().find(|s| !slots.contains_key(s)) {
            return Err(LlmError::MissingSlot(missing));
        }
        // single pass, so slot values are never themselves scanned for placeholders
        let text = PLACEHOLDER.replace_all(template, |c: &Captures| {
            let name = &c[1];
            let value = &slots[name];
            if FENCED_SLOTS.contains(&name) {
                fence(value, if name == "pseudocode" { "cpp" } else { "" })
            } else {
                value.clone()
            }
        });
        Ok(ChatMessage::new(Role::User, text.into_owned()))
    }
}

/// Wraps `body` in a Markdown fence longer than any backtick run inside it.
pub fn fence(body: &str, lang: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in body.chars() {
        if c == '`' {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    let ticks = "`".repeat(longest.max(2) + 1);
    let mut out = String::with_capacity(body.len() + 2 * ticks.len() + lang.len() + 2);
    out.push_str(&ticks);
    out.push_str(lang);
    out.push('\n');
    out.push_str(body);
    if !body.ends_with('\n') {
        out.push('\n');
    }
    out.push_str(&ticks);
    out
}

pub fn render_prompt(kind: PromptKind, slots: &BTreeMap<String, String>) -> Result<ChatMessage, LlmError> {
    PromptTemplates::default().render(kind, slots)
}
