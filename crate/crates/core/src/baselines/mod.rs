//! Chunk-then-rerank comparison pipelines.

mod chunk;
mod rerank;

use serde::{Deserialize, Serialize};

pub use chunk::{chunk_paragraphs, chunk_sliding_window, word_count, Chunk, DEFAULT_MAX_WORDS};
pub use rerank::{cosine, rerank, ChunkScorer, EmbeddingScorer, LexicalScorer, RerankedChunk};

/// How much reranked text is handed to the generator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum ContextBudget {
    /// The `n` best chunks.
    TopN(usize),
    /// Best chunks until the next one would exceed this many words.
    Words(usize),
    /// Same word count as the chunking-free evidence for the same example.
    #[default]
    MatchCfic,
}

/// Picks chunks in rank order under a word budget, always at least one.
///
/// Chunks whose sentences are all covered by earlier picks are skipped.
pub fn select_within_words(ranked: &[RerankedChunk], max_words: usize) -> Vec<&Chunk> {
    let mut picked: Vec<&Chunk> = Vec::new();
    let mut words = 0;
    for r in ranked {
        let c = &r.chunk;
        let covered = (c.sentence_start..=c.sentence_end).all(|s| {
            picked
                .iter()
                .any(|p| (p.sentence_start..=p.sentence_end).contains(&s))
        });
        if covered {
            continue;
        }
        if !picked.is_empty() && words + c.word_count > max_words {
            break;
        }
        words += c.word_count;
        picked.push(c);
    }
    picked
}

pub fn select_top_n(ranked: &[RerankedChunk], n: usize) -> Vec<&Chunk> {
    ranked.iter().take(n.max(1)).map(|r| &r.chunk).collect()
}

/// Selected chunk texts in rank order, blank-line separated.
pub fn render_context(chunks: &[&Chunk]) -> String {
    chunks
        .iter()
        .map(|c| c.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n")
}
