use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::document::{SentenceMap, SourceDocument};

pub const DEFAULT_MAX_WORDS: usize = 256;

/// A contiguous run of whole sentences (or one paragraph) from a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
    /// First and last sentence covered, inclusive.
    pub sentence_start: usize,
    pub sentence_end: usize,
    pub word_count: usize,
    /// A single sentence longer than the word limit.
    #[serde(default)]
    pub over_limit: bool,
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn make_chunk(doc: &SourceDocument, chars: Range<usize>, sentences: (usize, usize)) -> Chunk {
    let text = doc.slice_chars(chars.clone()).to_owned();
    Chunk {
        word_count: word_count(&text),
        text,
        char_start: chars.start,
        char_end: chars.end,
        sentence_start: sentences.0,
        sentence_end: sentences.1,
        over_limit: false,
    }
}

/// One chunk per starting sentence (stride 1), each greedily extended with
/// following sentences while it stays within `max_words`.
pub fn chunk_sliding_window(
    doc: &SourceDocument,
    map: &SentenceMap,
    max_words: usize,
) -> Vec<Chunk> {
    let s = &map.sentences;
    let mut chunks: Vec<Chunk> = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let mut end = i;
        let mut chunk = make_chunk(doc, s[i].char_start..s[i].char_end, (i, i));
        chunk.over_limit = chunk.word_count > max_words;
        while !chunk.over_limit && end + 1 < s.len() {
            let next = make_chunk(doc, s[i].char_start..s[end + 1].char_end, (i, end + 1));
            if next.word_count > max_words {
                break;
            }
            chunk = next;
            end += 1;
        }
        let dup = chunks.last().is_some_and(|c| {
            (c.sentence_start, c.sentence_end) == (chunk.sentence_start, chunk.sentence_end)
        });
        if !dup {
            chunks.push(chunk);
        }
    }
    chunks
}

/// One chunk per paragraph range; sentence indices are those of the
/// sentences lying inside the paragraph.
pub fn chunk_paragraphs(
    doc: &SourceDocument,
    map: &SentenceMap,
    paragraphs: &[Range<usize>],
) -> Vec<Chunk> {
    paragraphs
        .iter()
        .map(|p| {
            let inside: Vec<usize> = map
                .iter()
                .filter(|s| s.char_start >= p.start && s.char_end <= p.end)
                .map(|s| s.index)
                .collect();
            let first = inside.first().copied().unwrap_or(0);
            let last = inside.last().copied().unwrap_or(first);
            make_chunk(doc, p.clone(), (first, last))
        })
        .collect()
}
