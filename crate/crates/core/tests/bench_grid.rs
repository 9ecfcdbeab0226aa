use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use kgrag::bench::{mean_std, run_grid, BenchError, Dataset, GridSpec, MatchMode, ResultStore};
use kgrag::embedding::{EmbeddingStore, HashEmbedder, Similarity};
use kgrag::kg::{KnowledgeGraph, LoadOptions};
use kgrag::llm::{CompletionBackend, CompletionRequest, CompletionResponse, LlmError, ScriptedBackend};
use kgrag::{Direction, Pipeline, Variant};

fn synthetic_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets/synthetic")
}

struct Counting<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B: CompletionBackend> CompletionBackend for Counting<B> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn honors_seed(&self) -> bool {
        self.inner.honors_seed()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }
}

/// Fails every prompt that mentions `poison`.
struct Poisoned {
    inner: ScriptedBackend,
    poison: String,
}

impl CompletionBackend for Poisoned {
    fn name(&self) -> String {
        "poisoned".into()
    }

    fn honors_seed(&self) -> bool {
        true
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        if request.prompt.contains(&self.poison) {
            return Err(LlmError::BackendUnavailable("injected".into()));
        }
        self.inner.complete(request)
    }
}

fn oracle() -> ScriptedBackend {
    ScriptedBackend::from_file(synthetic_dir().join("oracle_rules.json")).unwrap()
}

fn pipeline(llm: Arc<dyn CompletionBackend>) -> Pipeline {
    let graph = KnowledgeGraph::load(synthetic_dir().join("kb.txt"), &LoadOptions::default()).unwrap();
    Pipeline::new(
        Arc::new(graph),
        llm,
        Arc::new(EmbeddingStore::ephemeral(Arc::new(HashEmbedder))),
    )
}

fn dataset(hop: u8) -> Dataset {
    Dataset {
        name: format!("{hop}-hop"),
        records: kgrag::bench::load_metaqa_qa(synthetic_dir().join(format!("qa_{hop}hop.txt")), hop).unwrap(),
    }
}

fn spec(variants: Vec<Variant>, seeds: Vec<u64>, sample_size: usize) -> GridSpec {
    GridSpec {
        variants,
        n_values: vec![1, 3],
        k_values: vec![30],
        seeds,
        sample_size,
        direction: Direction::Bidirectional,
        similarity: Similarity::Dot,
        match_mode: MatchMode::Exact,
    }
}

#[test]
fn resume_makes_no_backend_calls() {
    let dir = tempfile::tempdir().unwrap();
    let counting = Arc::new(Counting {
        inner: oracle(),
        calls: AtomicUsize::new(0),
    });
    let p = pipeline(counting.clone());
    let datasets = [dataset(1), dataset(2)];
    let s = spec(vec![Variant::Llm, Variant::KgRag], vec![0, 1], 5);

    let mut store = ResultStore::open(dir.path()).unwrap();
    let first = run_grid(&p, &datasets, &s, Some(&mut store), &mut |_, _| {}).unwrap();
    let after_first = counting.calls.load(Ordering::SeqCst);
    assert!(after_first > 0);
    assert_eq!(store.len(), first.len());

    let mut store = ResultStore::open(dir.path()).unwrap();
    let mut reused = 0;
    let second = run_grid(&p, &datasets, &s, Some(&mut store), &mut |_, cached| reused += cached as usize).unwrap();
    assert_eq!(counting.calls.load(Ordering::SeqCst), after_first);
    assert_eq!(reused, first.len());
    assert_eq!(first, second);
}

#[test]
fn changed_seeds_invalidate_stored_cells() {
    let dir = tempfile::tempdir().unwrap();
    let counting = Arc::new(Counting {
        inner: oracle(),
        calls: AtomicUsize::new(0),
    });
    let p = pipeline(counting.clone());
    let datasets = [dataset(1)];
    let mut store = ResultStore::open(dir.path()).unwrap();
    run_grid(&p, &datasets, &spec(vec![Variant::Llm], vec![0], 3), Some(&mut store), &mut |_, _| {}).unwrap();
    let before = counting.calls.load(Ordering::SeqCst);
    run_grid(&p, &datasets, &spec(vec![Variant::Llm], vec![0, 1], 3), Some(&mut store), &mut |_, _| {}).unwrap();
    assert!(counting.calls.load(Ordering::SeqCst) > before);
}

#[test]
fn oracle_one_hop_cell_scores_perfectly() {
    let p = pipeline(Arc::new(oracle()));
    let results = run_grid(&p, &[dataset(1)], &spec(vec![Variant::LlmKg], vec![0, 1, 2], 20), None, &mut |_, _| {}).unwrap();
    for r in &results {
        assert_eq!(r.mean_hit1, 1.0, "{}", r.key);
        assert_eq!(r.std_hit1, 0.0);
    }
}

#[test]
fn question_errors_do_not_abort_the_grid() {
    let d = dataset(1);
    let poison = d.records[..].iter().map(|r| r.question_entities[0].clone()).next().unwrap();
    let p = pipeline(Arc::new(Poisoned { inner: oracle(), poison }));
    let s = spec(vec![Variant::Llm], vec![0], d.records.len());
    let results = run_grid(&p, &[d], &s, None, &mut |_, _| {}).unwrap();
    let records = &results[0].records;
    let failed: Vec<_> = records.iter().filter(|r| r.error.is_some()).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|r| r.hit == 0 && r.generated.is_empty()));
    assert!(failed.len() < records.len());
}

#[test]
fn aggregates_match_recomputation() {
    let p = pipeline(Arc::new(oracle()));
    let s = spec(vec![Variant::Llm, Variant::LlmQd, Variant::KgRag], vec![3, 4, 5, 6], 10);
    let results = run_grid(&p, &[dataset(3)], &s, None, &mut |_, _| {}).unwrap();
    for r in &results {
        assert_eq!(r.records.len(), s.seeds.len() * s.sample_size);
        let per_seed: Vec<f64> = s
            .seeds
            .iter()
            .map(|seed| {
                let hits: Vec<u8> = r.records.iter().filter(|q| q.seed == *seed).map(|q| q.hit).collect();
                hits.iter().map(|&h| h as f64).sum::<f64>() / hits.len() as f64
            })
            .collect();
        for (a, b) in per_seed.iter().zip(&r.per_seed_hit1) {
            assert!((a - b).abs() < 1e-12);
        }
        let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
        let var = per_seed.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / per_seed.len() as f64;
        assert!((r.mean_hit1 - mean).abs() < 1e-12);
        assert!((r.std_hit1 - var.sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&r.per_seed_hit1), (r.mean_hit1, r.std_hit1));
    }
}

#[test]
fn oversized_sample_is_rejected_before_any_call() {
    let counting = Arc::new(Counting {
        inner: oracle(),
        calls: AtomicUsize::new(0),
    });
    let p = pipeline(counting.clone());
    let d = dataset(1);
    let s = spec(vec![Variant::Llm], vec![0], d.records.len() + 1);
    match run_grid(&p, &[d], &s, None, &mut |_, _| {}) {
        Err(BenchError::InvalidGrid(msg)) => assert!(msg.contains("fewer than the sample size"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(counting.calls.load(Ordering::SeqCst), 0);
}
