//! Human-readable output. Machine output is plain serde JSON.

use std::collections::BTreeMap;
use std::fmt::Write;

use kgrag::bench::EvalResult;
use kgrag::kg::DegreeStats;
use kgrag::AnswerRecord;

const HISTOGRAM_ROWS: usize = 12;

pub fn stats(s: &DegreeStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "entities   {}", s.entities);
    let _ = writeln!(out, "relations  {}", s.relations);
    let _ = writeln!(out, "triples    {}", s.triples);
    let _ = writeln!(
        out,
        "degree     min {}  median {}  max {}",
        s.degree.min, s.degree.median, s.degree.max
    );
    if !s.histogram.is_empty() {
        let _ = writeln!(out, "\ndegree  entities");
        for (d, n) in s.histogram.iter().take(HISTOGRAM_ROWS) {
            let _ = writeln!(out, "{d:>6}  {n}");
        }
        if s.histogram.len() > HISTOGRAM_ROWS {
            let rest: usize = s.histogram[HISTOGRAM_ROWS..].iter().map(|(_, n)| n).sum();
            let _ = writeln!(out, "{:>6}  {rest} more in {} larger bins", "...", s.histogram.len() - HISTOGRAM_ROWS);
        }
    }
    out
}

pub fn hops(buckets: &BTreeMap<usize, Vec<String>>) -> String {
    let mut out = String::new();
    for (hop, triples) in buckets {
        let _ = writeln!(out, "hop {hop}: {} triples", triples.len());
        for t in triples {
            let _ = writeln!(out, "  {t}");
        }
    }
    if buckets.values().all(Vec::is_empty) {
        out.push_str("no triples within range\n");
    }
    out
}

pub fn record(r: &AnswerRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Question: {}", r.question);
    let params = match (r.params.n_hops, r.params.top_k, r.params.direction) {
        (Some(n), Some(k), Some(d)) => format!(" (N={n}, K={k}, {d}, {} candidates)", r.candidate_pool_size),
        _ => String::new(),
    };
    let _ = writeln!(out, "Variant:  {}{params}", r.variant);

    if r.variant.uses_retrieval() || r.variant.uses_decomposition() {
        if let Some(d) = &r.decomposition {
            if !d.chain_of_thought.is_empty() {
                let _ = writeln!(out, "\nReasoning: {}", d.chain_of_thought);
            }
        }
        let _ = writeln!(out, "\nSub-questions:");
        for t in &r.traces {
            let _ = writeln!(out, "  {}. {}", t.index + 1, t.sub_question_effective);
            if t.sub_question_effective != t.sub_question_original {
                let _ = writeln!(out, "     from:   {}", t.sub_question_original);
            }
            if r.variant.uses_retrieval() {
                match t.selected.first() {
                    Some(top) => {
                        let _ = writeln!(out, "     top:    {} [{:.4}]", top.text, top.score);
                    }
                    None => {
                        let _ = writeln!(out, "     top:    (no facts)");
                    }
                }
            }
            let _ = writeln!(out, "     answer: {}", t.sub_answer);
        }
        if let Some(s) = &r.synthesis {
            if !s.explanation.is_empty() {
                let _ = writeln!(out, "\nExplanation: {}", s.explanation);
            }
        }
    }
    let _ = writeln!(out, "\nAnswer: {}", r.final_answer);
    if !r.flags.is_empty() {
        let flags: Vec<String> = r
            .flags
            .iter()
            .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
            .collect();
        let _ = writeln!(out, "Flags: {}", flags.join(", "));
    }
    let _ = writeln!(out, "Time: {:.0} ms", r.timings.total_ms);
    out
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn results_table(results: &[EvalResult]) -> String {
    let mut rows = vec![[
        "dataset".to_string(),
        "variant".to_string(),
        "N".to_string(),
        "K".to_string(),
        "seeds".to_string(),
        "hit@1".to_string(),
        "std".to_string(),
    ]];
    for r in results {
        rows.push([
            r.key.dataset.clone(),
            r.key.variant.to_string(),
            opt(r.key.n_hops),
            opt(r.key.top_k),
            r.seeds.len().to_string(),
            format!("{:.4}", r.mean_hit1),
            format!("{:.4}", r.std_hit1),
        ]);
    }
    let widths: Vec<usize> = (0..7).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
