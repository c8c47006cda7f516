use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    decode_prefix_candidates, rank_and_merge, skip_decode, DecodeConfig, DecodeError, EvidenceSpan,
    PrefixCandidate,
};
use crate::document::{
    build_prompt, segment_sentences, tokenize_sentences, DocumentError, SentenceMap,
    SourceDocument, TokenizedView,
};
use crate::oracle::{Oracle, OracleError, OracleMeter, TokenId, TokenSpace};
use crate::trie::{build_trie, IndexError, PrefixTrie};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractConfig {
    #[serde(flatten)]
    pub decode: DecodeConfig,
    /// Token budget of the model context. Tail sentences are dropped from
    /// the prompt's article until the prompt plus `max_beta + d` fits.
    pub max_context_tokens: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("segmentation: {0}")]
    Segment(DocumentError),
    #[error("prompt: {0}")]
    Prompt(DocumentError),
    #[error("prompt encoding: {0}")]
    Encode(OracleError),
    #[error("tokenization: {0}")]
    Tokenize(DocumentError),
    #[error("prefix index: {0}")]
    Index(IndexError),
    #[error("prefix decoding: {0}")]
    Prefix(DecodeError),
    #[error("skip decoding: {0}")]
    Skip(DecodeError),
    #[error("context budget: {0}")]
    Budget(String),
    #[error("faithfulness violation: {0}")]
    Faithfulness(String),
}

impl ExtractError {
    pub fn stage(&self) -> &'static str {
        match self {
            ExtractError::Segment(_) => "segment",
            ExtractError::Prompt(_) => "prompt",
            ExtractError::Encode(_) => "encode",
            ExtractError::Tokenize(_) => "tokenize",
            ExtractError::Index(_) => "index",
            ExtractError::Prefix(_) => "prefix",
            ExtractError::Skip(_) => "skip",
            ExtractError::Budget(_) => "budget",
            ExtractError::Faithfulness(_) => "faithfulness",
        }
    }

    /// The oracle failure underneath, if any.
    pub fn oracle_error(&self) -> Option<&OracleError> {
        match self {
            ExtractError::Encode(e) => Some(e),
            ExtractError::Prefix(DecodeError::Oracle(e))
            | ExtractError::Skip(DecodeError::Oracle(e)) => Some(e),
            ExtractError::Tokenize(DocumentError::Tokenizer { .. }) => None,
            _ => None,
        }
    }
}

/// Per-document structures shared by every query against it.
#[derive(Debug, Clone)]
pub struct DocumentIndex<'d> {
    pub doc: &'d SourceDocument,
    pub sentences: SentenceMap,
    pub view: TokenizedView,
    pub trie: PrefixTrie,
}

impl<'d> DocumentIndex<'d> {
    pub fn build(
        doc: &'d SourceDocument,
        sentences: SentenceMap,
        space: &dyn TokenSpace,
        trie_depth: usize,
    ) -> Result<Self, ExtractError> {
        let view = tokenize_sentences(doc, &sentences, space).map_err(ExtractError::Tokenize)?;
        let trie = build_trie(&view, trie_depth).map_err(ExtractError::Index)?;
        Ok(Self {
            doc,
            sentences,
            view,
            trie,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub oracle_calls: usize,
    pub prefix_calls: usize,
    pub boundary_calls: usize,
    pub candidates_expanded: usize,
    pub beta_per_candidate: Vec<usize>,
    pub sentences_indexed: usize,
    pub sentences_dropped: usize,
    pub truncated_spans: usize,
}

impl Diagnostics {
    pub fn beta_total(&self) -> usize {
        self.beta_per_candidate.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub doc_id: String,
    pub spans: Vec<EvidenceSpan>,
    /// The prefixes the spans were decoded from, best first.
    #[serde(skip)]
    pub candidates: Vec<PrefixCandidate>,
    /// Spans before merging, one per candidate.
    #[serde(skip)]
    pub raw_spans: Vec<EvidenceSpan>,
    pub diagnostics: Diagnostics,
}

impl ExtractionResult {
    /// Spans joined in document order, blank-line separated.
    pub fn evidence_text(&self) -> String {
        let mut spans: Vec<&EvidenceSpan> = self.spans.iter().collect();
        spans.sort_by_key(|s| s.char_start);
        spans
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// End-to-end extraction: prompt, index, prefix decoding, skip decoding,
/// merge.
pub fn extract_evidence(
    query: &str,
    doc: &SourceDocument,
    oracle: &dyn Oracle,
    cfg: &ExtractConfig,
) -> Result<ExtractionResult, ExtractError> {
    cfg.decode.validate().map_err(ExtractError::Prefix)?;
    let sentences = segment_sentences(doc).map_err(ExtractError::Segment)?;
    let total = sentences.len();
    let (sentences, context) = fit_context(query, doc, sentences, oracle.token_space(), cfg)?;
    let index = DocumentIndex::build(doc, sentences, oracle.token_space(), cfg.decode.trie_depth)?;
    let mut result = extract_with_index(&index, &context, oracle, &cfg.decode)?;
    result.diagnostics.sentences_dropped = total - index.sentences.len();
    Ok(result)
}

/// Renders and encodes the prompt, dropping tail sentences while it does
/// not fit the context budget.
fn fit_context(
    query: &str,
    doc: &SourceDocument,
    sentences: SentenceMap,
    space: &dyn TokenSpace,
    cfg: &ExtractConfig,
) -> Result<(SentenceMap, Vec<TokenId>), ExtractError> {
    let encode = |n: usize| -> Result<Vec<TokenId>, ExtractError> {
        let end = sentences.sentences[n - 1].char_end;
        let prompt = build_prompt(query, doc.slice_chars(0..end)).map_err(ExtractError::Prompt)?;
        Ok(space
            .encode(&prompt.generation_input())
            .map_err(ExtractError::Encode)?
            .ids)
    };
    let full = encode(sentences.len())?;
    let Some(max) = cfg.max_context_tokens else {
        return Ok((sentences, full));
    };
    let budget = max.saturating_sub(cfg.decode.max_beta + cfg.decode.d);
    if full.len() <= budget {
        return Ok((sentences, full));
    }
    // largest sentence count whose prompt fits
    let (mut lo, mut hi) = (0usize, sentences.len());
    let mut best = None;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        let ctx = encode(mid)?;
        if ctx.len() <= budget {
            best = Some((mid, ctx));
            lo = mid;
        } else {
            hi = mid - 1;
        }
        if lo == hi && best.as_ref().map(|b| b.0) != Some(lo) && lo > 0 {
            let ctx = encode(lo)?;
            best = Some((lo, ctx));
        }
    }
    match best {
        Some((n, ctx)) if n > 0 => Ok((sentences.truncated(n), ctx)),
        _ => Err(ExtractError::Budget(format!(
            "not even one sentence fits in {max} tokens with d = {}",
            cfg.decode.d
        ))),
    }
}

/// Runs decoding against a prebuilt index and an encoded prompt context.
pub fn extract_with_index(
    index: &DocumentIndex<'_>,
    context: &[TokenId],
    oracle: &dyn Oracle,
    cfg: &DecodeConfig,
) -> Result<ExtractionResult, ExtractError> {
    let meter = OracleMeter::new(oracle);
    let decoded = decode_prefix_candidates(&index.trie, &meter, context, cfg)
        .map_err(ExtractError::Prefix)?;

    let raw_spans: Vec<EvidenceSpan> = decoded
        .candidates
        .par_iter()
        .map(|c| skip_decode(c, index, &meter, context, cfg))
        .collect::<Result<_, _>>()
        .map_err(ExtractError::Skip)?;

    let spans = rank_and_merge(index.doc, &index.sentences, raw_spans.clone(), cfg.k);
    check_faithful(index, &spans)?;

    let diagnostics = Diagnostics {
        oracle_calls: meter.total_calls(),
        prefix_calls: meter.next_calls(),
        boundary_calls: meter.boundary_calls(),
        candidates_expanded: decoded.candidates_expanded(),
        beta_per_candidate: decoded.beta_per_candidate(),
        sentences_indexed: index.sentences.len(),
        sentences_dropped: 0,
        truncated_spans: spans.iter().filter(|s| s.truncated).count(),
    };
    Ok(ExtractionResult {
        doc_id: index.doc.doc_id().to_owned(),
        spans,
        candidates: decoded.candidates,
        raw_spans,
        diagnostics,
    })
}

fn check_faithful(index: &DocumentIndex<'_>, spans: &[EvidenceSpan]) -> Result<(), ExtractError> {
    let map = &index.sentences.sentences;
    for s in spans {
        let aligned = s.start_sentence <= s.end_sentence
            && s.end_sentence < map.len()
            && map[s.start_sentence].char_start == s.char_start
            && map[s.end_sentence].char_end == s.char_end;
        if !aligned || index.doc.slice_chars(s.char_start..s.char_end) != s.text {
            return Err(ExtractError::Faithfulness(format!(
                "span [{}, {}) is not a sentence-aligned verbatim slice",
                s.char_start, s.char_end
            )));
        }
    }
    Ok(())
}
