//! Rule-table backend for offline, reproducible runs.
//!
//! Each rule is a regex over the full prompt and a response template. The
//! first matching rule wins; capture groups expand as `$1` / `$name`.
//!
//! In oracle mode the expanded template may also contain directives that
//! read structured parts of the prompt:
//!
//! * `{{objects:REL:E1 | E2}}` objects of numbered fact lines `(S, REL, O)`
//!   whose subject is one of the listed entities
//! * `{{subjects:REL:E1 | E2}}` the converse
//! * `{{substitute}}` the `Next question:` line with every `{answer of N}`
//!   replaced by the matching `Sub-answer N:` line
//! * `{{last_answer}}` the value of the last `Sub-answer N:` line
//!
//! Lookup results are de-duplicated in prompt order and joined with `" | "`;
//! an empty lookup yields `unknown`.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::{apply_stop_sequences, CompletionBackend, CompletionRequest, CompletionResponse, FinishReason, LlmError};

pub const LIST_SEPARATOR: &str = " | ";
const UNKNOWN: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    #[serde(rename = "match")]
    pub pattern: String,
    pub respond: String,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pattern: Regex,
    respond: String,
}

impl Rule {
    pub fn new(pattern: &str, respond: impl Into<String>) -> Result<Self, LlmError> {
        Ok(Self {
            pattern: Regex::new(pattern).map_err(|e| LlmError::Rules(format!("{pattern:?}: {e}")))?,
            respond: respond.into(),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RuleFile {
    Plain(Vec<RuleSpec>),
    Full {
        #[serde(default)]
        oracle: bool,
        #[serde(default)]
        default: Option<String>,
        rules: Vec<RuleSpec>,
    },
}

#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    rules: Vec<Rule>,
    default_response: String,
    oracle: bool,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<Rule>) -> Self {
        Self {
            rules,
            default_response: "I don't know.".into(),
            oracle: false,
        }
    }

    pub fn with_oracle(mut self, oracle: bool) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.default_response = response.into();
        self
    }

    pub fn is_oracle(&self) -> bool {
        self.oracle
    }

    /// Accepts either `[{match, respond}, ...]` or
    /// `{"oracle": bool, "default": text, "rules": [...]}`.
    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let file: RuleFile = serde_json::from_str(text).map_err(|e| LlmError::Rules(e.to_string()))?;
        let (specs, oracle, default) = match file {
            RuleFile::Plain(rules) => (rules, false, None),
            RuleFile::Full { oracle, default, rules } => (rules, oracle, default),
        };
        let rules = specs
            .iter()
            .map(|s| Rule::new(&s.pattern, s.respond.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut backend = Self::new(rules).with_oracle(oracle);
        if let Some(d) = default {
            backend.default_response = d;
        }
        Ok(backend)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Rules(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Raw scripted output for a prompt, before stop sequences and length.
    pub fn render(&self, prompt: &str) -> String {
        let Some((rule, caps)) = self
            .rules
            .iter()
            .find_map(|r| r.pattern.captures(prompt).map(|c| (r, c)))
        else {
            return self.default_response.clone();
        };
        let mut expanded = String::new();
        caps.expand(&rule.respond, &mut expanded);
        if self.oracle {
            run_directives(&expanded, prompt)
        } else {
            expanded
        }
    }
}

fn directive_re() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{(\w+)(?::([^:}]*))?(?::([^}]*))?\}\}").expect("directive regex"))
}

fn run_directives(template: &str, prompt: &str) -> String {
    directive_re()
        .replace_all(template, |c: &Captures| {
            let arg = |i| c.get(i).map_or("", |m| m.as_str()).trim();
            match &c[1] {
                "objects" => lookup(prompt, arg(2), arg(3), true),
                "subjects" => lookup(prompt, arg(2), arg(3), false),
                "substitute" => substitute(prompt),
                "last_answer" => sub_answers(prompt)
                    .last()
                    .map(|(_, a)| a.clone())
                    .unwrap_or_else(|| UNKNOWN.to_string()),
                _ => c[0].to_string(),
            }
        })
        .into_owned()
}

fn fact_lines(prompt: &str) -> impl Iterator<Item = &str> {
    prompt.lines().filter_map(|line| {
        let line = line.trim();
        let rest = line.trim_start_matches(|c: char| c.is_ascii_digit());
        if rest.len() == line.len() {
            return None;
        }
        let rest = rest.strip_prefix('.')?.trim_start();
        rest.strip_prefix('(')?.strip_suffix(')')
    })
}

fn lookup(prompt: &str, relation: &str, entities: &str, want_objects: bool) -> String {
    let keys: Vec<&str> = entities.split('|').map(str::trim).filter(|e| !e.is_empty()).collect();
    let sep = format!(", {relation}, ");
    let mut found: Vec<&str> = Vec::new();
    for inner in fact_lines(prompt) {
        let Some(pos) = inner.find(&sep) else { continue };
        let (subject, object) = (&inner[..pos], &inner[pos + sep.len()..]);
        let (key, value) = if want_objects { (subject, object) } else { (object, subject) };
        if keys.contains(&key) && !found.contains(&value) {
            found.push(value);
        }
    }
    if found.is_empty() {
        UNKNOWN.to_string()
    } else {
        found.join(LIST_SEPARATOR)
    }
}

fn sub_answers(prompt: &str) -> Vec<(usize, String)> {
    prompt
        .lines()
        .filter_map(|line| {
            let rest = line.trim().strip_prefix("Sub-answer ")?;
            let (n, answer) = rest.split_once(':')?;
            Some((n.trim().parse().ok()?, answer.trim().to_string()))
        })
        .collect()
}

fn substitute(prompt: &str) -> String {
    let Some(question) = prompt
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix("Next question:"))
    else {
        return String::new();
    };
    let answers: HashMap<usize, String> = sub_answers(prompt).into_iter().collect();
    let placeholder = Regex::new(r"\{answer of (\d+)\}").expect("placeholder regex");
    placeholder
        .replace_all(question.trim(), |c: &Captures| {
            c[1].parse::<usize>()
                .ok()
                .and_then(|n| answers.get(&n).cloned())
                .unwrap_or_else(|| c[0].to_string())
        })
        .into_owned()
}

/// Byte offset just past the `n`-th whitespace-delimited token, if the text
/// has more than `n` tokens.
fn truncate_tokens(text: &str, n: usize) -> Option<&str> {
    let mut count = 0;
    let mut in_token = false;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if in_token {
                count += 1;
                in_token = false;
                if count == n {
                    let rest = &text[i..];
                    return if rest.split_whitespace().next().is_some() {
                        Some(&text[..i])
                    } else {
                        None
                    };
                }
            }
        } else {
            in_token = true;
        }
    }
    None
}

impl CompletionBackend for ScriptedBackend {
    fn name(&self) -> String {
        if self.oracle {
            "scripted-oracle".into()
        } else {
            "scripted".into()
        }
    }

    fn honors_seed(&self) -> bool {
        true
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        request.validate()?;
        let start = Instant::now();
        let raw = self.render(&request.prompt);
        let (text, _) = apply_stop_sequences(&raw, &request.stop);
        let (text, finish_reason) = match truncate_tokens(&text, request.max_tokens as usize) {
            Some(cut) => (cut.to_string(), FinishReason::Length),
            None => (text, FinishReason::Stop),
        };
        Ok(CompletionResponse {
            text,
            finish_reason,
            backend_latency_ms: start.elapsed().as_millis() as u64,
        })
    }
}
