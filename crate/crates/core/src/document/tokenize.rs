use serde::{Deserialize, Serialize};

use super::{DocumentError, SentenceMap, SourceDocument};
use crate::oracle::{TokenId, TokenSpace};

/// Tokens of one sentence, encoded from the sentence's own first character.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceTokens {
    pub sentence_index: usize,
    pub token_ids: Vec<TokenId>,
    /// Document-relative char ranges, one per token.
    pub token_char_offsets: Vec<(usize, usize)>,
}

impl SentenceTokens {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedView {
    pub sentences: Vec<SentenceTokens>,
}

impl TokenizedView {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn tokens(&self, sentence: usize) -> &[TokenId] {
        &self.sentences[sentence].token_ids
    }

    /// Token ids of sentences `from..` concatenated, stopping once `limit`
    /// tokens are collected.
    pub fn stream_from(&self, from: usize, limit: usize) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(limit);
        for s in &self.sentences[from..] {
            for &t in &s.token_ids {
                if out.len() == limit {
                    return out;
                }
                out.push(t);
            }
        }
        out
    }
}

pub fn tokenize_sentences(
    doc: &SourceDocument,
    map: &SentenceMap,
    space: &dyn TokenSpace,
) -> Result<TokenizedView, DocumentError> {
    let mut sentences = Vec::with_capacity(map.len());
    for s in map.iter() {
        let text = doc.slice_chars(s.range());
        let enc = space.encode(text).map_err(|e| DocumentError::Tokenizer {
            sentence: s.index,
            detail: e.to_string(),
        })?;
        if enc.ids.len() != enc.offsets.len() {
            return Err(DocumentError::TokenizationMismatch {
                sentence: s.index,
                detail: format!("{} ids but {} offsets", enc.ids.len(), enc.offsets.len()),
            });
        }
        let span_len = s.char_end - s.char_start;
        let mut prev_end = 0;
        let mut offsets = Vec::with_capacity(enc.offsets.len());
        for &(a, b) in &enc.offsets {
            if a > b || b > span_len || a < prev_end {
                return Err(DocumentError::TokenizationMismatch {
                    sentence: s.index,
                    detail: format!(
                        "token range ({a},{b}) outside or out of order in 0..{span_len}"
                    ),
                });
            }
            prev_end = b;
            offsets.push((s.char_start + a, s.char_start + b));
        }
        sentences.push(SentenceTokens {
            sentence_index: s.index,
            token_ids: enc.ids,
            token_char_offsets: offsets,
        });
    }
    Ok(TokenizedView { sentences })
}
