//! Chunking-free evidence extraction from long documents.
//!
//! A language-model oracle is driven through trie-constrained sentence-prefix
//! decoding; each prefix is then terminated at the sentence boundary with the
//! highest `[eos]` probability. Chunking baselines and a QA-F1 harness are
//! included for comparison.

pub mod baselines;
pub mod decoder;
pub mod document;
pub mod eval;
pub mod oracle;
pub mod synthetic;
pub mod text;
pub mod trie;

pub use decoder::{
    extract_evidence, DecodeConfig, DecodeMode, EvidenceSpan, ExtractConfig, ExtractionResult,
};
pub use document::SourceDocument;
pub use oracle::{Oracle, TokenSpace};
