//! Plain-text prompt templates with `{name}` placeholders.

use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub decompose: String,
    pub answer: String,
    pub answer_plain: String,
    pub reformulate: String,
    pub synthesize: String,
    /// In-context examples spliced into `{examples}` of the decomposition prompt.
    pub icl_examples: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            decompose: include_str!("../../../assets/prompts/decompose.txt").into(),
            answer: include_str!("../../../assets/prompts/answer.txt").into(),
            answer_plain: include_str!("../../../assets/prompts/answer_plain.txt").into(),
            reformulate: include_str!("../../../assets/prompts/reformulate.txt").into(),
            synthesize: include_str!("../../../assets/prompts/synthesize.txt").into(),
            icl_examples: include_str!("../../../assets/prompts/metaqa_icl.txt").into(),
        }
    }
}

impl PromptSet {
    /// Loads templates from `dir`; files that are absent keep the built-in
    /// version. File names: `decompose.txt`, `answer.txt`, `answer_plain.txt`,
    /// `reformulate.txt`, `synthesize.txt`, and `icl_examples` (default
    /// `metaqa_icl.txt`).
    pub fn load_dir(dir: impl AsRef<Path>, icl_file: Option<&Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref();
        let mut set = Self::default();
        let slots: [(&str, &mut String); 5] = [
            ("decompose.txt", &mut set.decompose),
            ("answer.txt", &mut set.answer),
            ("answer_plain.txt", &mut set.answer_plain),
            ("reformulate.txt", &mut set.reformulate),
            ("synthesize.txt", &mut set.synthesize),
        ];
        for (name, slot) in slots {
            let p = dir.join(name);
            if p.exists() {
                *slot = std::fs::read_to_string(p)?;
            }
        }
        let icl = icl_file.map(Path::to_path_buf).unwrap_or_else(|| dir.join("metaqa_icl.txt"));
        if icl.exists() {
            set.icl_examples = std::fs::read_to_string(icl)?;
        }
        Ok(set)
    }
}

/// Single-pass substitution: text inserted for one placeholder is never
/// re-scanned, and unknown `{...}` sequences are left alone.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        for (key, value) in vars {
            if let Some(after) = tail.strip_prefix(key).and_then(|t| t.strip_prefix('}')) {
                out.push_str(value);
                rest = after;
                continue 'scan;
            }
        }
        out.push('{');
        rest = tail;
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_known_keys_once() {
        let t = "Q: {question} / {answer of 1} / {question}";
        assert_eq!(
            render(t, &[("question", "is {question} here?")]),
            "Q: is {question} here? / {answer of 1} / is {question} here?"
        );
    }

    #[test]
    fn defaults_contain_their_placeholders() {
        let p = PromptSet::default();
        assert!(p.decompose.contains("{examples}") && p.decompose.contains("{question}"));
        assert!(p.answer.contains("{triples}") && p.answer.contains("{question}"));
        assert!(p.reformulate.contains("{pairs}"));
        assert!(p.synthesize.contains("{pairs}"));
        assert_eq!(p.icl_examples.matches("<END>").count(), 3);
    }

    #[test]
    fn load_dir_overrides_present_files_only() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("answer.txt"), "custom {question}").unwrap();
        let p = PromptSet::load_dir(dir.path(), None).unwrap();
        assert_eq!(p.answer, "custom {question}");
        assert_eq!(p.decompose, PromptSet::default().decompose);
    }
}
