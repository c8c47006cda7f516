//! Offset-preserving document structure: the stored article, its sentence and
//! paragraph layout, and per-sentence token views.
//!
//! All offsets exposed by this module are in unicode scalar values (chars),
//! never bytes. The stored text is never normalized.

mod prompt;
mod segment;
mod tokenize;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prompt::{build_prompt, PromptEnvelope, PROMPT_TEMPLATE};
pub use segment::{segment_paragraphs, segment_sentences, Segmenter, Sentence, SentenceMap};
pub use tokenize::{tokenize_sentences, SentenceTokens, TokenizedView};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("document is empty or whitespace-only")]
    EmptyDocument,
    #[error("prompt slot `{0}` is empty")]
    EmptySlot(&'static str),
    #[error("sentence {sentence}: token offsets cannot be aligned ({detail})")]
    TokenizationMismatch { sentence: usize, detail: String },
    #[error("tokenizer failed on sentence {sentence}: {detail}")]
    Tokenizer { sentence: usize, detail: String },
}

/// A long article held verbatim.
#[derive(Debug, Clone)]
pub struct SourceDocument {
    doc_id: String,
    text: String,
    // byte offset of every char boundary, len = char_len + 1
    char_to_byte: Vec<usize>,
}

impl SourceDocument {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut char_to_byte: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        char_to_byte.push(text.len());
        Self {
            doc_id: doc_id.into(),
            text,
            char_to_byte,
        }
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn byte_len(&self) -> usize {
        self.text.len()
    }

    pub fn char_len(&self) -> usize {
        self.char_to_byte.len() - 1
    }

    /// Byte offset of a char offset. `char_idx` may equal `char_len()`.
    pub fn byte_offset(&self, char_idx: usize) -> usize {
        self.char_to_byte[char_idx]
    }

    /// Verbatim slice addressed by char offsets.
    pub fn slice_chars(&self, range: Range<usize>) -> &str {
        &self.text[self.char_to_byte[range.start]..self.char_to_byte[range.end]]
    }

    pub fn is_blank(&self) -> bool {
        self.text.trim().is_empty()
    }
}

/// Ingestion record for JSONL document files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub text: String,
}

impl From<DocumentRecord> for SourceDocument {
    fn from(r: DocumentRecord) -> Self {
        SourceDocument::new(r.doc_id, r.text)
    }
}
