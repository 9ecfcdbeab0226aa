//! Deterministic movie-domain fixture: a small knowledge graph, templated
//! 1/2/3-hop questions with gold answers and gold paths, and a rule table
//! for the scripted backend that answers correctly whenever the needed
//! triples are in its prompt.

use std::collections::{BTreeSet, HashSet};
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::sample::SplitMix64;
use crate::kg::RawTriple;

pub const FIXTURE_SEED: u64 = 20_240_501;
pub const QUESTIONS_PER_HOP: usize = 50;

const MOVIES: usize = 40;
const DIRECTORS: usize = 14;
const WRITERS: usize = 14;
const ACTORS: usize = 36;

const SYLLABLES: [&str; 20] = [
    "ka", "lo", "mi", "ren", "tor", "vel", "sa", "dun", "bri", "quo", "zan", "pel", "gor", "fi", "nu", "wex", "tal",
    "mor", "shi", "dra",
];
const GENRES: [&str; 8] = [
    "Drama",
    "Comedy",
    "Thriller",
    "Romance",
    "Horror",
    "Animation",
    "Western",
    "Documentary",
];
const LANGUAGES: [&str; 5] = ["English", "French", "German", "Spanish", "Japanese"];

const DIRECTED: &str = "directed_by";
const WRITTEN: &str = "written_by";
const STARRED: &str = "starred_actors";
const YEAR: &str = "release_year";
const GENRE: &str = "has_genre";
const LANGUAGE: &str = "in_language";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Seed {
    Movie,
    Director,
    Writer,
    Actor,
}

/// `(relation, forward)`: forward steps go subject to object.
type Step = (&'static str, bool);

struct Template {
    text: &'static str,
    seed: Seed,
    path: &'static [Step],
}

const ONE_HOP: &[Template] = &[
    Template { text: "who directed [E]", seed: Seed::Movie, path: &[(DIRECTED, true)] },
    Template { text: "who was [E] written by", seed: Seed::Movie, path: &[(WRITTEN, true)] },
    Template { text: "which actors starred in [E]", seed: Seed::Movie, path: &[(STARRED, true)] },
    Template { text: "what is the genre of [E]", seed: Seed::Movie, path: &[(GENRE, true)] },
    Template { text: "what year was [E] released", seed: Seed::Movie, path: &[(YEAR, true)] },
    Template { text: "what language is [E] in", seed: Seed::Movie, path: &[(LANGUAGE, true)] },
    Template { text: "which films starred [E]", seed: Seed::Actor, path: &[(STARRED, false)] },
    Template { text: "which films were directed by [E]", seed: Seed::Director, path: &[(DIRECTED, false)] },
    Template { text: "which films were written by [E]", seed: Seed::Writer, path: &[(WRITTEN, false)] },
];

const TWO_HOP: &[Template] = &[
    Template {
        text: "who directed the films starring [E]",
        seed: Seed::Actor,
        path: &[(STARRED, false), (DIRECTED, true)],
    },
    Template {
        text: "what is the genre of the films directed by [E]",
        seed: Seed::Director,
        path: &[(DIRECTED, false), (GENRE, true)],
    },
    Template {
        text: "which actors starred in the films written by [E]",
        seed: Seed::Writer,
        path: &[(WRITTEN, false), (STARRED, true)],
    },
    Template {
        text: "what language are the films starring [E] in",
        seed: Seed::Actor,
        path: &[(STARRED, false), (LANGUAGE, true)],
    },
];

const THREE_HOP: &[Template] = &[
    Template {
        text: "who directed the films that share actors with [E]",
        seed: Seed::Movie,
        path: &[(STARRED, true), (STARRED, false), (DIRECTED, true)],
    },
    Template {
        text: "what is the genre of the films directed by the director of [E]",
        seed: Seed::Movie,
        path: &[(DIRECTED, true), (DIRECTED, false), (GENRE, true)],
    },
    Template {
        text: "what year were the films written by the writer of [E] released",
        seed: Seed::Movie,
        path: &[(WRITTEN, true), (WRITTEN, false), (YEAR, true)],
    },
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticQuestion {
    pub hop: u8,
    /// Question text with the entity in brackets.
    pub question: String,
    pub entity: String,
    pub answers: Vec<String>,
    /// Every triple on a path from the entity to an answer, as `s|r|o`.
    pub gold_triples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticFixture {
    pub triples: Vec<RawTriple>,
    pub questions: Vec<SyntheticQuestion>,
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

struct Namer {
    rng: SplitMix64,
    used: HashSet<String>,
}

impl Namer {
    /// A word never handed out before, so no two entities share a token.
    fn word(&mut self) -> String {
        loop {
            let n = 2 + self.rng.below(2);
            let w: String = (0..n).map(|_| SYLLABLES[self.rng.below(SYLLABLES.len())]).collect();
            if self.used.insert(w.clone()) {
                return capitalize(&w);
            }
        }
    }

    fn name(&mut self) -> String {
        format!("{} {}", self.word(), self.word())
    }
}

fn triple_key(t: &RawTriple) -> String {
    format!("{}|{}|{}", t.subject, t.relation, t.object)
}

/// Endpoints of every walk along `path`, in discovery order, plus the
/// triples those walks use.
fn walk(triples: &[RawTriple], seed: &str, path: &[Step]) -> (Vec<String>, Vec<String>) {
    let mut walks: Vec<(String, Vec<usize>)> = vec![(seed.to_string(), Vec::new())];
    for &(rel, forward) in path {
        let mut next = Vec::new();
        for (at, used) in &walks {
            for (i, t) in triples.iter().enumerate() {
                if t.relation != rel {
                    continue;
                }
                let (from, to) = if forward { (&t.subject, &t.object) } else { (&t.object, &t.subject) };
                if from == at {
                    let mut u = used.clone();
                    u.push(i);
                    next.push((to.clone(), u));
                }
            }
        }
        walks = next;
    }
    let mut answers = Vec::new();
    let mut gold = BTreeSet::new();
    for (end, used) in walks {
        if !answers.contains(&end) {
            answers.push(end);
        }
        gold.extend(used);
    }
    (answers, gold.into_iter().map(|i| triple_key(&triples[i])).collect())
}

pub fn generate() -> SyntheticFixture {
    let mut namer = Namer {
        rng: SplitMix64::new(FIXTURE_SEED),
        used: HashSet::new(),
    };
    let directors: Vec<String> = (0..DIRECTORS).map(|_| namer.name()).collect();
    let writers: Vec<String> = (0..WRITERS).map(|_| namer.name()).collect();
    let actors: Vec<String> = (0..ACTORS).map(|_| namer.name()).collect();
    let movies: Vec<String> = (0..MOVIES).map(|_| namer.name()).collect();
    let mut rng = namer.rng;

    let mut triples = Vec::new();
    for m in &movies {
        triples.push(RawTriple::new(m, DIRECTED, &directors[rng.below(DIRECTORS)]));
        triples.push(RawTriple::new(m, WRITTEN, &writers[rng.below(WRITERS)]));
        let cast = 2 + rng.below(2);
        let mut chosen: Vec<usize> = Vec::new();
        while chosen.len() < cast {
            let a = rng.below(ACTORS);
            if !chosen.contains(&a) {
                chosen.push(a);
            }
        }
        for a in chosen {
            triples.push(RawTriple::new(m, STARRED, &actors[a]));
        }
        triples.push(RawTriple::new(m, YEAR, (1960 + rng.below(60)).to_string()));
        triples.push(RawTriple::new(m, GENRE, GENRES[rng.below(GENRES.len())]));
        triples.push(RawTriple::new(m, LANGUAGE, LANGUAGES[rng.below(LANGUAGES.len())]));
    }

    let mut questions = Vec::new();
    for (hop, templates) in [(1u8, ONE_HOP), (2, TWO_HOP), (3, THREE_HOP)] {
        let mut seen = HashSet::new();
        let mut made = 0;
        while made < QUESTIONS_PER_HOP {
            let t = &templates[rng.below(templates.len())];
            let pool = match t.seed {
                Seed::Movie => &movies,
                Seed::Director => &directors,
                Seed::Writer => &writers,
                Seed::Actor => &actors,
            };
            let entity = &pool[rng.below(pool.len())];
            if !seen.insert((t.text, entity.clone())) {
                continue;
            }
            let (answers, gold_triples) = walk(&triples, entity, t.path);
            if answers.is_empty() {
                continue;
            }
            questions.push(SyntheticQuestion {
                hop,
                question: t.text.replace("[E]", &format!("[{entity}]")),
                entity: entity.clone(),
                answers,
                gold_triples,
            });
            made += 1;
        }
    }
    SyntheticFixture { triples, questions }
}

fn sub_answer_rule(question: &str, directive: &str) -> Value {
    json!({
        "match": format!(r"(?i)\nQuestion: {question}\?*\nAnswer:\s*\z"),
        "respond": directive,
    })
}

fn decomposition_rule(question: &str, reasoning: &str, subs: &[&str]) -> Value {
    let numbered: Vec<String> = subs.iter().enumerate().map(|(i, s)| format!("{}. {s}", i + 1)).collect();
    json!({
        "match": format!(r"\nQuestion: {question}\n*\z"),
        "respond": format!("Reasoning: {reasoning}\nSub-questions:\n{}\n<END>", numbered.join("\n")),
    })
}

/// Rule table for the scripted backend in oracle mode, keyed to the default
/// prompt templates.
pub fn oracle_rules() -> Value {
    const E: &str = "(?P<e>[^\\n]+?)";
    let rules = vec![
        json!({
            "match": r"\nExplanation:\s*\z",
            "respond": "Each sub-answer feeds the next sub-question, so the last sub-answer answers the main question.\nAnswer: {{last_answer}}",
        }),
        json!({ "match": r"\nRewritten question:\s*\z", "respond": "{{substitute}}" }),
        decomposition_rule(
            &format!("who directed the films that share actors with {E}"),
            "Find the actors of ${e}, then the films those actors starred in, then the directors of those films.",
            &["Which actors starred in ${e}?", "Which films starred {answer of 1}?", "Who directed {answer of 2}?"],
        ),
        decomposition_rule(
            &format!("what is the genre of the films directed by the director of {E}"),
            "Find the director of ${e}, then the films by that director, then their genres.",
            &["Who directed ${e}?", "Which films were directed by {answer of 1}?", "What is the genre of {answer of 2}?"],
        ),
        decomposition_rule(
            &format!("what year were the films written by the writer of {E} released"),
            "Find the writer of ${e}, then the films by that writer, then their release years.",
            &[
                "Who was ${e} written by?",
                "Which films were written by {answer of 1}?",
                "What year was {answer of 2} released?",
            ],
        ),
        decomposition_rule(
            &format!("who directed the films starring {E}"),
            "Find the films starring ${e}, then their directors.",
            &["Which films starred ${e}?", "Who directed {answer of 1}?"],
        ),
        decomposition_rule(
            &format!("what is the genre of the films directed by {E}"),
            "Find the films directed by ${e}, then their genres.",
            &["Which films were directed by ${e}?", "What is the genre of {answer of 1}?"],
        ),
        decomposition_rule(
            &format!("which actors starred in the films written by {E}"),
            "Find the films written by ${e}, then their actors.",
            &["Which films were written by ${e}?", "Which actors starred in {answer of 1}?"],
        ),
        decomposition_rule(
            &format!("what language are the films starring {E} in"),
            "Find the films starring ${e}, then their languages.",
            &["Which films starred ${e}?", "What language is {answer of 1} in?"],
        ),
        json!({ "match": r"\nQuestion: [^\n]*\n*\z", "respond": "No decomposition needed.\n<END>" }),
        sub_answer_rule(&format!("who directed {E}"), "{{objects:directed by:${e}}}"),
        sub_answer_rule(&format!("who was {E} written by"), "{{objects:written by:${e}}}"),
        sub_answer_rule(&format!("which actors starred in {E}"), "{{objects:starred actors:${e}}}"),
        sub_answer_rule(&format!("what is the genre of {E}"), "{{objects:has genre:${e}}}"),
        sub_answer_rule(&format!("what year was {E} released"), "{{objects:release year:${e}}}"),
        sub_answer_rule(&format!("what language is {E} in"), "{{objects:in language:${e}}}"),
        sub_answer_rule(&format!("which films starred {E}"), "{{subjects:starred actors:${e}}}"),
        sub_answer_rule(&format!("which films were directed by {E}"), "{{subjects:directed by:${e}}}"),
        sub_answer_rule(&format!("which films were written by {E}"), "{{subjects:written by:${e}}}"),
    ];
    json!({ "oracle": true, "default": "I don't know.", "rules": rules })
}

impl SyntheticFixture {
    pub fn kb_text(&self) -> String {
        self.triples.iter().map(|t| triple_key(t) + "\n").collect()
    }

    /// MetaQA-style QA lines for one hop count.
    pub fn qa_text(&self, hop: u8) -> String {
        self.questions
            .iter()
            .filter(|q| q.hop == hop)
            .map(|q| format!("{}\t{}\n", q.question, q.answers.join("|")))
            .collect()
    }

    pub fn gold_text(&self) -> String {
        serde_json::to_string_pretty(&self.questions).expect("serializable") + "\n"
    }

    /// `(file name, contents)` for every fixture file.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        vec![
            ("kb.txt", self.kb_text()),
            ("qa_1hop.txt", self.qa_text(1)),
            ("qa_2hop.txt", self.qa_text(2)),
            ("qa_3hop.txt", self.qa_text(3)),
            ("gold_paths.json", self.gold_text()),
            (
                "oracle_rules.json",
                serde_json::to_string_pretty(&oracle_rules()).expect("serializable") + "\n",
            ),
        ]
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> io::Result<()> {
        std::fs::create_dir_all(&dir)?;
        for (name, text) in self.files() {
            std::fs::write(dir.as_ref().join(name), text)?;
        }
        Ok(())
    }
}
