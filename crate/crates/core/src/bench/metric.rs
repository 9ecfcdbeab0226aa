use serde::{Deserialize, Serialize};

use crate::llm::LIST_SEPARATOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    Exact,
    Contains,
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(MatchMode::Exact),
            "contains" => Ok(MatchMode::Contains),
            _ => Err(format!("unknown match mode {s:?} (expected exact or contains)")),
        }
    }
}

/// Lowercase, trim, and collapse internal whitespace runs to one space.
pub fn normalize_answer(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn hit_at_1<S: AsRef<str>>(generated: &str, gold: &[S], mode: MatchMode) -> u8 {
    let g = normalize_answer(generated);
    let hit = gold.iter().map(|a| normalize_answer(a.as_ref())).any(|a| match mode {
        MatchMode::Exact => g == a,
        MatchMode::Contains => g.contains(&a),
    });
    hit as u8
}

/// The top-ranked entity of an extracted answer list.
pub fn scoring_answer(final_answer: &str) -> &str {
    final_answer
        .split(LIST_SEPARATOR.trim())
        .map(str::trim)
        .find(|s| !s.is_empty())
        .unwrap_or("")
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
