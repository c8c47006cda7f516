//! Dataset loading, QA F1, pipeline runs and SFT data construction.

mod dataset;
mod f1;
mod generate;
mod runner;
mod sft;

pub use dataset::{
    load_examples, parse_record, read_examples, DatasetError, EvalExample, LoadedExamples,
    DEFAULT_DATASET_TAG,
};
pub use f1::{normalize_answer, qa_f1};
pub use generate::{EchoGenerator, GenerationInput, Generator, RemoteGenerator};
pub use runner::{
    render_table, run_eval, DatasetSummary, EvalConfig, ExampleRecord, MetricReport, Pipeline,
};
pub use sft::{
    sft_make, ClozeQueryGenerator, QueryGenerator, RemoteQueryGenerator, SftTriplet,
    SpanSamplerConfig,
};
