//! Benchmark harness: QA loading, seeded sampling, Hit@1 scoring and
//! parameter grids.

mod grid;
mod metaqa;
mod metric;
mod sample;
pub mod synthetic;

use thiserror::Error;

pub use grid::{
    emit_results, plan_cells, run_grid, write_results, CellKey, Dataset, EvalResult, GridSpec, OutputFormat,
    QuestionResult, ResultStore, CELLS_FILE, CSV_COLUMNS,
};
pub use metaqa::{load_metaqa_qa, parse_qa_line, QARecord};
pub use metric::{hit_at_1, mean_std, normalize_answer, scoring_answer, MatchMode};
pub use sample::{sample, sample_indices, SamplePlan, SplitMix64};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("malformed QA line {row}: {reason}")]
    MalformedQALine { row: usize, reason: String },
    #[error("sample of {size} requested from {available} records")]
    SampleTooLarge { size: usize, available: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("result file: {0}")]
    Results(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
