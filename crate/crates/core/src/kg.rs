//! Immutable, doubly indexed triple store.
//!
//! Entities and relations are interned into dense tables in first-appearance
//! order. Each entity owns two adjacency lists stored in CSR form: the
//! triples where it is the subject (`out`) and the triples where it is the
//! object (`in`). Both lists are sorted by triple index.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("malformed triple on line {row}: {reason}")]
    MalformedLine { row: usize, reason: String },
    #[error("entity not found: {0:?}")]
    EntityNotFound(String),
    #[error("failed to read triple file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u32);

/// Position of a triple in [`KnowledgeGraph::triples`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TripleIdx(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TripleIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
}

/// A triple exactly as it appeared in the source file.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawTriple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl RawTriple {
    pub fn new(subject: impl Into<String>, relation: impl Into<String>, object: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: char,
    pub skip_blank_lines: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: '|',
            skip_blank_lines: true,
        }
    }
}

/// Splits one row of a triple file. `row` is only used for error reporting.
pub fn parse_triple_line(line: &str, delimiter: char, row: usize) -> Result<RawTriple, KgError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = line.split(delimiter).collect();
    if fields.len() != 3 {
        return Err(KgError::MalformedLine {
            row,
            reason: format!("expected 3 fields, found {}", fields.len()),
        });
    }
    if let Some(pos) = fields.iter().position(|f| f.trim().is_empty()) {
        return Err(KgError::MalformedLine {
            row,
            reason: format!("field {} is empty", pos + 1),
        });
    }
    Ok(RawTriple::new(fields[0], fields[1], fields[2]))
}

/// Compressed sparse row adjacency: `targets[offsets[e]..offsets[e + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Adjacency {
    offsets: Vec<u32>,
    targets: Vec<TripleIdx>,
}

impl Adjacency {
    fn build(entity_count: usize, triples: &[Triple], key: impl Fn(&Triple) -> EntityId) -> Self {
        let mut offsets = vec![0u32; entity_count + 1];
        for t in triples {
            offsets[key(t).index() + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![TripleIdx(0); triples.len()];
        for (i, t) in triples.iter().enumerate() {
            let slot = &mut cursor[key(t).index()];
            targets[*slot as usize] = TripleIdx(i as u32);
            *slot += 1;
        }
        Self { offsets, targets }
    }

    fn get(&self, entity: EntityId) -> &[TripleIdx] {
        let e = entity.index();
        &self.targets[self.offsets[e] as usize..self.offsets[e + 1] as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entities: Vec<String>,
    relations: Vec<String>,
    triples: Vec<Triple>,
    out_index: Adjacency,
    in_index: Adjacency,
    name_lookup: HashMap<String, EntityId>,
}

struct Interner<Id> {
    table: Vec<String>,
    lookup: HashMap<String, Id>,
}

impl<Id: Copy> Interner<Id> {
    fn new() -> Self {
        Self {
            table: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    fn intern(&mut self, name: String, make: impl Fn(u32) -> Id) -> Id {
        if let Some(&id) = self.lookup.get(&name) {
            return id;
        }
        let id = make(self.table.len() as u32);
        self.table.push(name.clone());
        self.lookup.insert(name, id);
        id
    }
}

impl KnowledgeGraph {
    /// Builds a graph, interning names in first-appearance order and dropping
    /// repeated triples (first occurrence wins).
    pub fn build<I>(raw: I) -> Self
    where
        I: IntoIterator<Item = RawTriple>,
    {
        let mut entities = Interner::<EntityId>::new();
        let mut relations = Interner::<RelationId>::new();
        let mut seen = HashSet::new();
        let mut triples = Vec::new();
        let mut duplicates = 0usize;
        for r in raw {
            let subject = entities.intern(r.subject, EntityId);
            let relation = relations.intern(r.relation, RelationId);
            let object = entities.intern(r.object, EntityId);
            let t = Triple {
                subject,
                relation,
                object,
            };
            if seen.insert(t) {
                triples.push(t);
            } else {
                duplicates += 1;
            }
        }
        if duplicates > 0 {
            tracing::debug!(duplicates, "dropped duplicate triples");
        }
        let n = entities.table.len();
        let out_index = Adjacency::build(n, &triples, |t| t.subject);
        let in_index = Adjacency::build(n, &triples, |t| t.object);
        Self {
            entities: entities.table,
            relations: relations.table,
            triples,
            out_index,
            in_index,
            name_lookup: entities.lookup,
        }
    }

    /// Parses and builds from any reader; stops at the first malformed row.
    pub fn from_reader<R: Read>(reader: R, opts: &LoadOptions) -> Result<Self, KgError> {
        let mut raw = Vec::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            if opts.skip_blank_lines && line.trim().is_empty() {
                continue;
            }
            raw.push(parse_triple_line(&line, opts.delimiter, i + 1)?);
        }
        Ok(Self::build(raw))
    }

    pub fn load(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Self, KgError> {
        Self::from_reader(File::open(path)?, opts)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn triple(&self, idx: TripleIdx) -> Triple {
        self.triples[idx.index()]
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities[id.index()]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relations[id.index()]
    }

    /// Triples with `entity` as subject, in ascending triple order.
    pub fn outgoing(&self, entity: EntityId) -> &[TripleIdx] {
        self.out_index.get(entity)
    }

    /// Triples with `entity` as object, in ascending triple order.
    pub fn incoming(&self, entity: EntityId) -> &[TripleIdx] {
        self.in_index.get(entity)
    }

    /// Exact, case-sensitive lookup with a whitespace-trimmed retry.
    pub fn resolve_entity(&self, name: &str) -> Result<EntityId, KgError> {
        if let Some(&id) = self.name_lookup.get(name) {
            return Ok(id);
        }
        let trimmed = name.trim();
        if let Some(&id) = self.name_lookup.get(trimmed) {
            return Ok(id);
        }
        // stored names may themselves carry stray whitespace
        self.entities
            .iter()
            .position(|e| e.trim() == trimmed)
            .map(|i| EntityId(i as u32))
            .ok_or_else(|| KgError::EntityNotFound(name.to_string()))
    }

    pub fn degree(&self, entity: EntityId) -> usize {
        self.outgoing(entity).len() + self.incoming(entity).len()
    }

    pub fn degree_stats(&self) -> DegreeStats {
        DegreeStats::compute(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DegreeSummary {
    pub min: usize,
    pub median: usize,
    pub max: usize,
}

/// Entity degree distribution, where degree counts incident triples in
/// either direction. The median is the lower median.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DegreeStats {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
    pub degree: DegreeSummary,
    /// `(degree, entity count)` pairs in ascending degree order.
    pub histogram: Vec<(usize, usize)>,
}

impl DegreeStats {
    fn compute(graph: &KnowledgeGraph) -> Self {
        let mut degrees: Vec<usize> = (0..graph.entity_count())
            .map(|e| graph.degree(EntityId(e as u32)))
            .collect();
        degrees.sort_unstable();
        let mut histogram = BTreeMap::new();
        for &d in &degrees {
            *histogram.entry(d).or_insert(0usize) += 1;
        }
        let degree = if degrees.is_empty() {
            DegreeSummary::default()
        } else {
            DegreeSummary {
                min: degrees[0],
                median: degrees[(degrees.len() - 1) / 2],
                max: degrees[degrees.len() - 1],
            }
        };
        Self {
            entities: graph.entity_count(),
            relations: graph.relation_count(),
            triples: graph.triple_count(),
            degree,
            histogram: histogram.into_iter().collect(),
        }
    }
}

impl fmt::Display for DegreeStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} entities, {} relations, {} triples; degree min {} / median {} / max {}",
            self.entities, self.relations, self.triples, self.degree.min, self.degree.median, self.degree.max
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(s: &str, r: &str, o: &str) -> RawTriple {
        RawTriple::new(s, r, o)
    }

    fn inception_graph() -> KnowledgeGraph {
        KnowledgeGraph::build([
            raw("Inception", "release_year", "2010"),
            raw("Inception", "directed_by", "Christopher Nolan"),
            raw("Inception", "starred_actors", "Tom Hardy"),
            raw("The Dark Knight Rises", "directed_by", "Christopher Nolan"),
            raw("The Dark Knight Rises", "starred_actors", "Tom Hardy"),
            raw("Bronson", "starred_actors", "Tom Hardy"),
        ])
    }

    #[test]
    fn parses_pipe_delimited_line() {
        let t = parse_triple_line("Inception|directed_by|Christopher Nolan\r\n", '|', 1).unwrap();
        assert_eq!(t, raw("Inception", "directed_by", "Christopher Nolan"));
    }

    #[test]
    fn rejects_wrong_field_count_and_empty_fields() {
        for (line, row) in [("a|b|c|d", 7), ("a||c", 8), ("a|b", 9), ("a|b|  ", 10)] {
            match parse_triple_line(line, '|', row) {
                Err(KgError::MalformedLine { row: r, .. }) => assert_eq!(r, row),
                other => panic!("{line:?} -> {other:?}"),
            }
        }
    }

    #[test]
    fn custom_delimiter() {
        let t = parse_triple_line("a\tb c\td", '\t', 1).unwrap();
        assert_eq!(t, raw("a", "b c", "d"));
    }

    #[test]
    fn duplicate_triples_are_dropped() {
        let g = KnowledgeGraph::build([raw("A", "r", "B"), raw("A", "r", "B")]);
        assert_eq!(g.entity_count(), 2);
        assert_eq!(g.relation_count(), 1);
        assert_eq!(g.triple_count(), 1);
    }

    #[test]
    fn indexes_split_by_role() {
        let g = KnowledgeGraph::build([raw("A", "r", "B"), raw("B", "r", "C")]);
        let b = g.resolve_entity("B").unwrap();
        let out: Vec<_> = g.outgoing(b).iter().map(|&i| g.triple(i)).collect();
        let inc: Vec<_> = g.incoming(b).iter().map(|&i| g.triple(i)).collect();
        assert_eq!(out.len(), 1);
        assert_eq!(g.entity_name(out[0].object), "C");
        assert_eq!(inc.len(), 1);
        assert_eq!(g.entity_name(inc[0].subject), "A");
    }

    #[test]
    fn interning_is_first_appearance_order() {
        let g = inception_graph();
        assert_eq!(&g.entities()[..3], ["Inception", "2010", "Christopher Nolan"]);
        assert_eq!(g.relations(), ["release_year", "directed_by", "starred_actors"]);
    }

    #[test]
    fn resolve_is_case_sensitive_with_trimmed_retry() {
        let g = inception_graph();
        let id = g.resolve_entity("Inception").unwrap();
        assert_eq!(g.entity_name(id), "Inception");
        assert!(matches!(g.resolve_entity("inception"), Err(KgError::EntityNotFound(_))));
        assert_eq!(g.resolve_entity(" Inception ").unwrap(), id);
    }

    #[test]
    fn degree_stats_single_triple() {
        let g = KnowledgeGraph::build([raw("A", "r", "B")]);
        let s = g.degree_stats();
        assert_eq!(s.degree, DegreeSummary { min: 1, median: 1, max: 1 });
        assert_eq!(s.histogram, vec![(1, 2)]);
    }

    #[test]
    fn degree_stats_star_graph() {
        let g = KnowledgeGraph::build((0..10).map(|i| raw("hub", "r", &format!("leaf{i}"))));
        let s = g.degree_stats();
        assert_eq!(s.entities, 11);
        assert_eq!(s.degree.max, 10);
        assert_eq!(s.degree.median, 1);
        assert_eq!(s.histogram, vec![(1, 10), (10, 1)]);
    }

    #[test]
    fn lower_median_for_even_counts() {
        let g = KnowledgeGraph::build([
            raw("A", "r", "B"),
            raw("A", "r", "C"),
            raw("A", "r", "D"),
            raw("D", "r", "C"),
            raw("D", "r", "B"),
            raw("D", "r", "E"),
        ]);
        // A=3, B=2, C=2, D=4, E=1 -> [1,2,2,3,4] median 2 (odd)
        assert_eq!(g.degree_stats().degree.median, 2);
        let g = KnowledgeGraph::build([raw("A", "r", "B"), raw("A", "r", "C"), raw("B", "r", "C"), raw("C", "r", "D")]);
        // A=2, B=2, C=3, D=1 -> [1,2,2,3] lower median = 2
        assert_eq!(g.degree_stats().degree.median, 2);
        let g = KnowledgeGraph::build([raw("A", "r", "B"), raw("C", "r", "D"), raw("A", "r", "D")]);
        // A=2, B=1, C=1, D=2 -> [1,1,2,2] lower median = 1
        assert_eq!(g.degree_stats().degree.median, 1);
    }

    #[test]
    fn empty_graph_has_zeroed_stats() {
        let g = KnowledgeGraph::build(Vec::new());
        let s = g.degree_stats();
        assert_eq!(s, DegreeStats::default());
    }

    #[test]
    fn reader_reports_row_numbers_and_skips_blanks() {
        let data = "a|r|b\n\nb|r|c\nbad line\n";
        match KnowledgeGraph::from_reader(data.as_bytes(), &LoadOptions::default()) {
            Err(KgError::MalformedLine { row, .. }) => assert_eq!(row, 4),
            other => panic!("{other:?}"),
        }
        let g = KnowledgeGraph::from_reader("a|r|b\n\nb|r|c\n".as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(g.triple_count(), 2);
    }

    #[test]
    fn stats_serialize_to_expected_shape() {
        let g = KnowledgeGraph::build([raw("A", "r", "B")]);
        let v = serde_json::to_value(g.degree_stats()).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "entities": 2, "relations": 1, "triples": 1,
                "degree": {"min": 1, "median": 1, "max": 1},
                "histogram": [[1, 2]]
            })
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn raw_triples() -> impl Strategy<Value = Vec<RawTriple>> {
            prop::collection::vec((0u8..12, 0u8..3, 0u8..12), 0..60).prop_map(|v| {
                v.into_iter()
                    .map(|(s, r, o)| raw(&format!("e{s}"), &format!("r{r}"), &format!("e{o}")))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn index_completeness_and_bijection(input in raw_triples()) {
                let g = KnowledgeGraph::build(input.clone());
                let mut seen_out = vec![0usize; g.triple_count()];
                let mut seen_in = vec![0usize; g.triple_count()];
                for e in 0..g.entity_count() {
                    let id = EntityId(e as u32);
                    for &t in g.outgoing(id) {
                        prop_assert_eq!(g.triple(t).subject, id);
                        seen_out[t.index()] += 1;
                    }
                    for &t in g.incoming(id) {
                        prop_assert_eq!(g.triple(t).object, id);
                        seen_in[t.index()] += 1;
                    }
                    prop_assert_eq!(g.resolve_entity(g.entity_name(id)).unwrap(), id);
                }
                prop_assert!(seen_out.iter().all(|&c| c == 1));
                prop_assert!(seen_in.iter().all(|&c| c == 1));
                let distinct: HashSet<_> = input.iter().cloned().collect();
                prop_assert_eq!(distinct.len(), g.triple_count());
                let names: HashSet<_> = g.entities().iter().collect();
                prop_assert_eq!(names.len(), g.entity_count());
                prop_assert_eq!(KnowledgeGraph::build(input), g);
            }
        }
    }
}
