use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QARecord {
    /// Question with the entity brackets removed.
    pub question_text: String,
    pub question_entities: Vec<String>,
    pub gold_answers: Vec<String>,
    pub hop_label: u8,
}

/// Parses `question-with-[entity]<TAB>answer1|answer2`. `row` is 1-based.
pub fn parse_qa_line(line: &str, row: usize, hop_label: u8) -> Result<QARecord, BenchError> {
    let bad = |reason: &str| BenchError::MalformedQALine {
        row,
        reason: reason.to_string(),
    };
    let line = line.trim_end_matches(['\r', '\n']);
    let (question, answers) = line.split_once('\t').ok_or_else(|| bad("missing tab separator"))?;

    let mut text = String::with_capacity(question.len());
    let mut entities = Vec::new();
    let mut rest = question;
    while let Some(open) = rest.find('[') {
        let close = rest[open..].find(']').ok_or_else(|| bad("unclosed '['"))? + open;
        let entity = rest[open + 1..close].trim();
        if entity.is_empty() {
            return Err(bad("empty entity brackets"));
        }
        text.push_str(&rest[..open]);
        text.push_str(&rest[open + 1..close]);
        entities.push(entity.to_string());
        rest = &rest[close + 1..];
    }
    text.push_str(rest);
    if entities.is_empty() {
        return Err(bad("no bracketed entity"));
    }

    let gold: Vec<String> = answers
        .split('|')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(str::to_string)
        .collect();
    if gold.is_empty() {
        return Err(bad("no answers"));
    }
    Ok(QARecord {
        question_text: text.trim().to_string(),
        question_entities: entities,
        gold_answers: gold,
        hop_label,
    })
}

/// Loads a QA file; blank lines are skipped.
pub fn load_metaqa_qa(path: impl AsRef<Path>, hop_label: u8) -> Result<Vec<QARecord>, BenchError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_qa_line(&line, i + 1, hop_label)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_standard_line() {
        let r = parse_qa_line("what movies did [Tom Hardy] act in\tInception|Bronson", 1, 1).unwrap();
        assert_eq!(r.question_text, "what movies did Tom Hardy act in");
        assert_eq!(r.question_entities, ["Tom Hardy"]);
        assert_eq!(r.gold_answers, ["Inception", "Bronson"]);
    }

    #[test]
    fn captures_every_bracket_pair() {
        let r = parse_qa_line("films with [A] and [B C]\tX", 1, 2).unwrap();
        assert_eq!(r.question_entities, ["A", "B C"]);
        assert_eq!(r.question_text, "films with A and B C");
    }

    #[test]
    fn malformed_lines_cite_row() {
        for line in ["no tab [A] here", "no brackets\tX", "[A] empty answers\t", "[A unclosed\tX", "[] q\tX"] {
            match parse_qa_line(line, 7, 1) {
                Err(BenchError::MalformedQALine { row: 7, .. }) => {}
                other => panic!("{line:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn loader_skips_blank_lines_and_counts_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("qa.txt");
        std::fs::write(&p, "who directed [M]\tD\n\nbad line\n").unwrap();
        match load_metaqa_qa(&p, 1) {
            Err(BenchError::MalformedQALine { row: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
