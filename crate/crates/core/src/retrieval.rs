//! Breadth-first candidate triple retrieval around question entities.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kg::{EntityId, KnowledgeGraph, Triple, TripleIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Follow subject -> object edges only.
    Outgoing,
    #[default]
    Bidirectional,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Outgoing => "outgoing",
            Direction::Bidirectional => "bidirectional",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "outgoing" | "out" | "unidirectional" | "directed" => Ok(Direction::Outgoing),
            "bidirectional" | "both" | "undirected" => Ok(Direction::Bidirectional),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// Candidate triples grouped by the hop at which they were first reached.
/// `buckets[h - 1]` holds hop `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopBuckets {
    pub seeds: Vec<EntityId>,
    pub n_hops: usize,
    pub buckets: Vec<Vec<TripleIdx>>,
}

impl HopBuckets {
    pub fn total(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = TripleIdx> + '_ {
        self.buckets.iter().flatten().copied()
    }
}

/// Collects every triple within `n_hops` of the seeds, assigning each triple
/// to the first hop at which it touches the frontier. All seeds share a
/// single traversal.
pub fn retrieve_candidates(
    graph: &KnowledgeGraph,
    seeds: &[EntityId],
    n_hops: usize,
    direction: Direction,
) -> HopBuckets {
    let mut visited = vec![false; graph.entity_count()];
    let mut emitted = vec![false; graph.triple_count()];
    let mut frontier = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if !visited[s.index()] {
            visited[s.index()] = true;
            frontier.push(s);
        }
    }

    let mut buckets = Vec::with_capacity(n_hops);
    for _ in 0..n_hops {
        let mut bucket = Vec::new();
        let mut next = Vec::new();
        for &entity in &frontier {
            let incoming: &[TripleIdx] = match direction {
                Direction::Outgoing => &[],
                Direction::Bidirectional => graph.incoming(entity),
            };
            for &t in graph.outgoing(entity).iter().chain(incoming) {
                if emitted[t.index()] {
                    continue;
                }
                emitted[t.index()] = true;
                bucket.push(t);
                let triple = graph.triple(t);
                for end in [triple.subject, triple.object] {
                    if !visited[end.index()] {
                        visited[end.index()] = true;
                        next.push(end);
                    }
                }
            }
        }
        buckets.push(bucket);
        frontier = next;
    }

    HopBuckets {
        seeds: seeds.to_vec(),
        n_hops,
        buckets,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbalizedTriple {
    pub text: String,
    #[serde(skip)]
    pub source: Option<Triple>,
}

/// Renders `(subject, relation, object)`; underscores in the relation become
/// spaces, entity strings are left untouched.
pub fn verbalize_triple(graph: &KnowledgeGraph, triple: Triple) -> VerbalizedTriple {
    VerbalizedTriple {
        text: verbalize_parts(
            graph.entity_name(triple.subject),
            graph.relation_name(triple.relation),
            graph.entity_name(triple.object),
        ),
        source: Some(triple),
    }
}

pub fn verbalize_relation(relation: &str) -> String {
    relation.replace('_', " ")
}

pub fn verbalize_parts(subject: &str, relation: &str, object: &str) -> String {
    format!("({subject}, {}, {object})", verbalize_relation(relation))
}

/// Concatenates buckets in hop order.
pub fn flatten_candidates(graph: &KnowledgeGraph, buckets: &HopBuckets) -> Vec<VerbalizedTriple> {
    buckets.iter().map(|t| verbalize_triple(graph, graph.triple(t))).collect()
}

/// `{hop: [verbalized triples]}` with 1-based hop keys.
pub fn buckets_to_json(graph: &KnowledgeGraph, buckets: &HopBuckets) -> BTreeMap<usize, Vec<String>> {
    buckets
        .buckets
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let texts = b.iter().map(|&t| verbalize_triple(graph, graph.triple(t)).text).collect();
            (i + 1, texts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::RawTriple;

    fn inception_graph() -> KnowledgeGraph {
        KnowledgeGraph::build([
            RawTriple::new("Inception", "release_year", "2010"),
            RawTriple::new("Inception", "directed_by", "Christopher Nolan"),
            RawTriple::new("Inception", "starred_actors", "Tom Hardy"),
            RawTriple::new("The Dark Knight Rises", "directed_by", "Christopher Nolan"),
            RawTriple::new("The Dark Knight Rises", "starred_actors", "Tom Hardy"),
            RawTriple::new("Bronson", "starred_actors", "Tom Hardy"),
            RawTriple::new("Bronson", "release_year", "2008"),
            RawTriple::new("Lonely Node", "has_genre", "Drama"),
        ])
    }

    fn texts(g: &KnowledgeGraph, b: &[TripleIdx]) -> Vec<String> {
        b.iter().map(|&t| verbalize_triple(g, g.triple(t)).text).collect()
    }

    #[test]
    fn outgoing_one_hop_from_inception() {
        let g = inception_graph();
        let seed = g.resolve_entity("Inception").unwrap();
        let hb = retrieve_candidates(&g, &[seed], 1, Direction::Outgoing);
        assert_eq!(
            texts(&g, &hb.buckets[0]),
            [
                "(Inception, release year, 2010)",
                "(Inception, directed by, Christopher Nolan)",
                "(Inception, starred actors, Tom Hardy)"
            ]
        );
        // directed graph: nothing leaves the objects
        let hb = retrieve_candidates(&g, &[seed], 3, Direction::Outgoing);
        assert_eq!(hb.total(), 3);
    }

    #[test]
    fn bidirectional_expands_across_hops() {
        let g = inception_graph();
        let seed = g.resolve_entity("Inception").unwrap();
        let hb = retrieve_candidates(&g, &[seed], 3, Direction::Bidirectional);
        assert_eq!(hb.buckets[0].len(), 3);
        assert_eq!(
            texts(&g, &hb.buckets[1]),
            [
                "(The Dark Knight Rises, directed by, Christopher Nolan)",
                "(The Dark Knight Rises, starred actors, Tom Hardy)",
                "(Bronson, starred actors, Tom Hardy)"
            ]
        );
        assert_eq!(texts(&g, &hb.buckets[2]), ["(Bronson, release year, 2008)"]);
    }

    #[test]
    fn isolated_seed_gives_empty_buckets() {
        let g = KnowledgeGraph::build([RawTriple::new("A", "r", "B"), RawTriple::new("C", "r", "C")]);
        let b = g.resolve_entity("B").unwrap();
        let hb = retrieve_candidates(&g, &[b], 3, Direction::Outgoing);
        assert_eq!(hb.buckets, vec![Vec::<TripleIdx>::new(); 3]);
    }

    #[test]
    fn self_loop_emitted_once() {
        let g = KnowledgeGraph::build([RawTriple::new("C", "r", "C")]);
        let c = g.resolve_entity("C").unwrap();
        let hb = retrieve_candidates(&g, &[c], 2, Direction::Bidirectional);
        assert_eq!(hb.total(), 1);
    }

    #[test]
    fn multiple_seeds_are_one_traversal() {
        let g = inception_graph();
        let a = g.resolve_entity("Inception").unwrap();
        let b = g.resolve_entity("Bronson").unwrap();
        let hb = retrieve_candidates(&g, &[a, b], 1, Direction::Bidirectional);
        assert_eq!(hb.buckets[0].len(), 5);
        let hb2 = retrieve_candidates(&g, &[a, b, a], 1, Direction::Bidirectional);
        assert_eq!(hb.buckets, hb2.buckets);
    }

    #[test]
    fn verbalization_only_touches_relation() {
        let g = KnowledgeGraph::build([
            RawTriple::new("Inception", "directed_by", "Christopher Nolan"),
            RawTriple::new("Blade_Runner", "genre", "Sci_Fi"),
        ]);
        let v: Vec<_> = g.triples().iter().map(|&t| verbalize_triple(&g, t).text).collect();
        assert_eq!(v[0], "(Inception, directed by, Christopher Nolan)");
        assert_eq!(v[1], "(Blade_Runner, genre, Sci_Fi)");
    }

    #[test]
    fn flatten_preserves_hop_order() {
        let g = inception_graph();
        let seed = g.resolve_entity("Inception").unwrap();
        let hb = retrieve_candidates(&g, &[seed], 3, Direction::Bidirectional);
        let flat = flatten_candidates(&g, &hb);
        assert_eq!(flat.len(), hb.total());
        let expected: Vec<String> = hb.buckets.iter().flat_map(|b| texts(&g, b)).collect();
        assert_eq!(flat.iter().map(|v| v.text.clone()).collect::<Vec<_>>(), expected);

        let empty = HopBuckets {
            seeds: vec![],
            n_hops: 2,
            buckets: vec![vec![], vec![]],
        };
        assert!(flatten_candidates(&g, &empty).is_empty());
    }

    #[test]
    fn json_shape_uses_one_based_hops() {
        let g = inception_graph();
        let seed = g.resolve_entity("Inception").unwrap();
        let hb = retrieve_candidates(&g, &[seed], 2, Direction::Outgoing);
        let j = serde_json::to_value(buckets_to_json(&g, &hb)).unwrap();
        assert_eq!(j["1"].as_array().unwrap().len(), 3);
        assert_eq!(j["2"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn direction_parses() {
        assert_eq!("Bidirectional".parse::<Direction>().unwrap(), Direction::Bidirectional);
        assert_eq!("outgoing".parse::<Direction>().unwrap(), Direction::Outgoing);
        assert!("sideways".parse::<Direction>().is_err());
    }
}
