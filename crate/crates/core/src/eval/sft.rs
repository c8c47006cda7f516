use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RemoteGenerator;
use crate::document::{segment_sentences, SourceDocument};
use crate::oracle::OracleError;
use crate::text;

/// A (query, article, evidence) training record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftTriplet {
    pub query: String,
    pub article: String,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpanSamplerConfig {
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub spans_per_doc: usize,
    pub seed: u64,
}

impl Default for SpanSamplerConfig {
    fn default() -> Self {
        Self {
            min_sentences: 1,
            max_sentences: 6,
            spans_per_doc: 1,
            seed: 0,
        }
    }
}

/// Writes a question answerable from `evidence`.
pub trait QueryGenerator: Send + Sync {
    fn query(&self, evidence: &str, article: &str) -> Result<String, OracleError>;
}

/// Cloze question: the span's rarest content word (by frequency in the
/// article, earliest on ties) is blanked in the sentence carrying it.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClozeQueryGenerator;

impl QueryGenerator for ClozeQueryGenerator {
    fn query(&self, evidence: &str, article: &str) -> Result<String, OracleError> {
        let mut freq: HashMap<String, usize> = HashMap::new();
        for w in text::words(article) {
            *freq.entry(w).or_default() += 1;
        }
        let target = text::content_words(evidence)
            .min_by_key(|w| freq.get(w).copied().unwrap_or(0))
            .ok_or_else(|| OracleError::InvalidRequest("span has no content word".into()))?;
        let doc = SourceDocument::new("span", evidence);
        let map =
            segment_sentences(&doc).map_err(|e| OracleError::InvalidRequest(e.to_string()))?;
        let sentence = (0..map.len())
            .map(|i| map.text(&doc, i))
            .find(|s| text::words(s).any(|w| w == target))
            .unwrap_or(evidence);
        let blanked: Vec<String> = sentence
            .split(' ')
            .map(|tok| {
                let core: String = tok.chars().filter(|c| c.is_alphanumeric()).collect();
                if core.to_lowercase() == target {
                    tok.replace(core.as_str(), "____")
                } else {
                    tok.to_owned()
                }
            })
            .collect();
        Ok(format!(
            "Which word fills the blank: \"{}\"?",
            blanked.join(" ")
        ))
    }
}

/// Asks a remote text generator for the question.
pub struct RemoteQueryGenerator(pub RemoteGenerator);

impl QueryGenerator for RemoteQueryGenerator {
    fn query(&self, evidence: &str, _article: &str) -> Result<String, OracleError> {
        let prompt = format!(
            "Write one question that can be answered using only the following passage.\nPassage:\n{evidence}\nQuestion:"
        );
        let q = self.0.complete(&prompt)?;
        let q = q.trim();
        if q.is_empty() {
            return Err(OracleError::Protocol(
                "generator returned an empty question".into(),
            ));
        }
        Ok(q.to_owned())
    }
}

/// Samples sentence-aligned spans from each document and asks `queries`
/// for a question per span. Spans whose question fails are skipped.
pub fn sft_make(
    docs: &[SourceDocument],
    cfg: &SpanSamplerConfig,
    queries: &dyn QueryGenerator,
) -> Vec<SftTriplet> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for doc in docs {
        let Ok(map) = segment_sentences(doc) else {
            tracing::warn!(doc = doc.doc_id(), "skipping empty document");
            continue;
        };
        for _ in 0..cfg.spans_per_doc {
            let lo = cfg.min_sentences.max(1).min(map.len());
            let hi = cfg.max_sentences.max(lo).min(map.len());
            let len = rng.gen_range(lo..=hi);
            let start = rng.gen_range(0..=map.len() - len);
            let a = map.sentences[start].char_start;
            let b = map.sentences[start + len - 1].char_end;
            let evidence = doc.slice_chars(a..b);
            match queries.query(evidence, doc.text()) {
                Ok(query) => out.push(SftTriplet {
                    query,
                    article: doc.text().to_owned(),
                    evidence: evidence.to_owned(),
                }),
                Err(e) => {
                    tracing::warn!(doc = doc.doc_id(), error = %e, "query generation failed, span skipped")
                }
            }
        }
    }
    out
}
