//! Evidence decoding: trie-constrained sentence-prefix search, boundary
//! `[eos]` termination, span merging, and the end-to-end extractor.

mod ablation;
mod extract;
mod merge;
mod prefix;
mod skip;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{OracleError, TokenId};
use crate::trie::{IndexError, DEFAULT_MAX_DEPTH};

pub use ablation::{ablation_unconstrained_prefix, AblationOutcome, ABLATION_SEQUENCE_LEN};
pub use extract::{
    extract_evidence, extract_with_index, Diagnostics, DocumentIndex, ExtractConfig, ExtractError,
    ExtractionResult,
};
pub use merge::rank_and_merge;
pub use prefix::{decode_prefix_candidates, rank_candidates, PrefixDecoding};
pub use skip::skip_decode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("invalid decode config: {0}")]
    InvalidConfig(String),
    #[error("no prefix candidates (empty trie)")]
    NoCandidates,
    #[error("invalid candidate: {0}")]
    InvalidCandidate(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum DecodeMode {
    /// Top-k by logprob, ties to the lower token id.
    Deterministic,
    /// Seeded top-k sampling without replacement (Gumbel top-k).
    Stochastic { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeConfig {
    /// Sentence prefixes kept.
    pub k: usize,
    /// Largest continuation, in tokens beyond the prefix, at which a
    /// sentence boundary may terminate a span.
    pub d: usize,
    pub max_beta: usize,
    pub mode: DecodeMode,
    /// Cap on prefix candidates held at once (finished plus in-progress).
    pub max_candidates_expanded: usize,
    /// Depth of the sentence-prefix trie.
    pub trie_depth: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            k: 3,
            d: 256,
            max_beta: 16,
            mode: DecodeMode::Deterministic,
            max_candidates_expanded: 64,
            trie_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        let bad = |m: &str| Err(DecodeError::InvalidConfig(m.to_owned()));
        if self.k == 0 {
            return bad("k must be >= 1");
        }
        if self.d == 0 {
            return bad("d must be >= 1");
        }
        if self.max_beta == 0 {
            return bad("max_beta must be >= 1");
        }
        if self.trie_depth == 0 {
            return bad("trie_depth must be >= 1");
        }
        if self.max_candidates_expanded < self.k {
            return bad("max_candidates_expanded must be >= k");
        }
        Ok(())
    }
}

/// A decoded sentence prefix and the sentence it identifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixCandidate {
    pub token_ids: Vec<TokenId>,
    pub per_token_logprobs: Vec<f64>,
    /// Mean of `per_token_logprobs`.
    pub score: f64,
    pub resolved_sentence: usize,
    /// Other sentences sharing the exact prefix (duplicates).
    pub alternates: Vec<usize>,
}

impl PrefixCandidate {
    pub fn beta(&self) -> usize {
        self.token_ids.len()
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// A verbatim, sentence-aligned slice of the source document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSpan {
    #[serde(skip_serializing)]
    pub doc_id: String,
    pub char_start: usize,
    pub char_end: usize,
    pub start_sentence: usize,
    pub end_sentence: usize,
    pub text: String,
    #[serde(rename = "score")]
    pub prefix_score: f64,
    pub eos_logprob: f64,
    /// The start sentence alone ran past `d` tokens.
    #[serde(default)]
    pub truncated: bool,
    #[serde(skip)]
    pub continuation_tokens: usize,
}
