use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Chunk;
use crate::oracle::remote::HttpJson;
use crate::oracle::wire::{EmbedReply, EmbedRequest};
use crate::oracle::OracleError;
use crate::text;

/// Relevance of each chunk to a query, in input order.
pub trait ChunkScorer: Send + Sync {
    fn score(&self, query: &str, chunks: &[Chunk]) -> Result<Vec<f64>, OracleError>;
}

/// Idf-weighted query-term coverage, with idf computed over the chunks
/// being ranked: `Σ idf(t) for t in Q∩C / Σ idf(t) for t in Q`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl LexicalScorer {
    pub fn idf(df: usize, n: usize) -> f64 {
        ((n as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0
    }
}

impl ChunkScorer for LexicalScorer {
    fn score(&self, query: &str, chunks: &[Chunk]) -> Result<Vec<f64>, OracleError> {
        let terms: HashSet<String> = text::content_words(query).collect();
        let bags: Vec<HashSet<String>> = chunks
            .iter()
            .map(|c| text::content_words(&c.text).collect())
            .collect();
        let mut df: HashMap<&str, usize> = HashMap::new();
        for t in &terms {
            df.insert(t, bags.iter().filter(|b| b.contains(t)).count());
        }
        let n = chunks.len();
        let total: f64 = terms.iter().map(|t| Self::idf(df[t.as_str()], n)).sum();
        Ok(bags
            .iter()
            .map(|bag| {
                if total == 0.0 {
                    return 0.0;
                }
                terms
                    .iter()
                    .filter(|t| bag.contains(*t))
                    .map(|t| Self::idf(df[t.as_str()], n))
                    .sum::<f64>()
                    / total
            })
            .collect())
    }
}

/// Cosine similarity over vectors from a remote `/v1/embed` endpoint.
pub struct EmbeddingScorer {
    http: HttpJson,
}

impl EmbeddingScorer {
    pub fn new(http: HttpJson) -> Self {
        Self { http }
    }

    fn embed(&self, texts: Vec<String>) -> Result<Vec<Vec<f64>>, OracleError> {
        let n = texts.len();
        let reply: EmbedReply = self.http.post("/v1/embed", &EmbedRequest { texts })?;
        if reply.vectors.len() != n {
            return Err(OracleError::Protocol(format!(
                "asked for {n} embeddings, got {}",
                reply.vectors.len()
            )));
        }
        Ok(reply.vectors)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl ChunkScorer for EmbeddingScorer {
    fn score(&self, query: &str, chunks: &[Chunk]) -> Result<Vec<f64>, OracleError> {
        let mut texts = vec![query.to_owned()];
        texts.extend(chunks.iter().map(|c| c.text.clone()));
        let vectors = self.embed(texts)?;
        Ok(vectors[1..]
            .iter()
            .map(|v| cosine(&vectors[0], v))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankedChunk {
    #[serde(flatten)]
    pub chunk: Chunk,
    pub score: f64,
}

/// Scores every chunk and sorts descending; ties keep document order.
pub fn rerank(
    query: &str,
    chunks: Vec<Chunk>,
    scorer: &dyn ChunkScorer,
) -> Result<Vec<RerankedChunk>, OracleError> {
    let scores = scorer.score(query, &chunks)?;
    let mut out: Vec<RerankedChunk> = chunks
        .into_iter()
        .zip(scores)
        .map(|(chunk, score)| RerankedChunk { chunk, score })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(out)
}
