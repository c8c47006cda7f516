use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{DocumentError, SourceDocument};

const TERMINALS: [char; 4] = ['.', '!', '?', '…'];
const CLOSERS: [char; 7] = ['"', '\'', ')', ']', '”', '’', '»'];

const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "inc", "ltd",
    "co", "corp", "no", "fig", "al", "approx", "dept", "est", "gen", "gov", "jan", "feb", "mar",
    "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "u.k", "mt", "capt",
    "col", "lt", "sgt", "rev", "vol", "pp",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub paragraph_index: usize,
}

impl Sentence {
    pub fn range(&self) -> Range<usize> {
        self.char_start..self.char_end
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceMap {
    pub sentences: Vec<Sentence>,
}

impl SentenceMap {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Sentence> {
        self.sentences.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    /// Verbatim text of sentence `index`.
    pub fn text<'d>(&self, doc: &'d SourceDocument, index: usize) -> &'d str {
        doc.slice_chars(self.sentences[index].range())
    }

    /// Keeps only the first `n` sentences.
    pub fn truncated(&self, n: usize) -> SentenceMap {
        SentenceMap {
            sentences: self.sentences[..n.min(self.sentences.len())].to_vec(),
        }
    }
}

/// Rule-based sentence splitter.
///
/// A sentence ends after a run of `. ! ? …` (plus closing quotes or brackets)
/// that is followed by whitespace or the end of the line, unless the next
/// word starts lowercase or the word carrying a single `.` is a guarded
/// abbreviation. A newline always ends a
/// sentence.
#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl Segmenter {
    /// Abbreviations are matched case-insensitively, without their final dot.
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.as_ref().trim_end_matches('.').to_lowercase())
                .collect(),
        }
    }

    pub fn segment(&self, doc: &SourceDocument) -> Result<SentenceMap, DocumentError> {
        if doc.is_blank() {
            return Err(DocumentError::EmptyDocument);
        }
        let chars: Vec<char> = doc.text().chars().collect();
        let mut sentences = Vec::new();
        let mut paragraph_index = 0usize;

        for line in line_ranges(&chars) {
            let before = sentences.len();
            self.segment_line(&chars, line, paragraph_index, &mut sentences);
            if sentences.len() > before {
                paragraph_index += 1;
            }
        }
        Ok(SentenceMap { sentences })
    }

    fn segment_line(
        &self,
        chars: &[char],
        line: Range<usize>,
        paragraph_index: usize,
        out: &mut Vec<Sentence>,
    ) {
        let mut start = skip_ws(chars, line.start, line.end);
        let mut i = start;
        while i < line.end {
            if !TERMINALS.contains(&chars[i]) {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < line.end && TERMINALS.contains(&chars[j]) {
                j += 1;
            }
            let single_dot = j == i + 1 && chars[i] == '.';
            while j < line.end && CLOSERS.contains(&chars[j]) {
                j += 1;
            }
            let next = skip_ws(chars, j, line.end);
            let at_break = j == line.end
                || (chars[j].is_whitespace() && (next == line.end || !chars[next].is_lowercase()));
            if at_break && !(single_dot && self.is_abbreviation(chars, start, i)) {
                push(out, start, j, paragraph_index);
                start = skip_ws(chars, j, line.end);
                i = start;
            } else {
                i = j;
            }
        }
        if start < line.end {
            let end = trim_end(chars, start, line.end);
            if end > start {
                push(out, start, end, paragraph_index);
            }
        }
    }

    fn is_abbreviation(&self, chars: &[char], sentence_start: usize, dot: usize) -> bool {
        let mut w = dot;
        while w > sentence_start && !chars[w - 1].is_whitespace() {
            w -= 1;
        }
        let word: String = chars[w..dot]
            .iter()
            .filter(|c| !matches!(c, '(' | '"' | '\'' | '[' | '“'))
            .collect::<String>()
            .to_lowercase();
        !word.is_empty() && self.abbreviations.contains(&word)
    }
}

fn push(out: &mut Vec<Sentence>, start: usize, end: usize, paragraph_index: usize) {
    out.push(Sentence {
        index: out.len(),
        char_start: start,
        char_end: end,
        paragraph_index,
    });
}

fn line_ranges(chars: &[char]) -> Vec<Range<usize>> {
    let mut lines = Vec::new();
    let mut start = 0;
    for (i, &c) in chars.iter().enumerate() {
        if c == '\n' {
            lines.push(start..i);
            start = i + 1;
        }
    }
    lines.push(start..chars.len());
    lines
}

fn skip_ws(chars: &[char], mut i: usize, end: usize) -> usize {
    while i < end && chars[i].is_whitespace() {
        i += 1;
    }
    i
}

fn trim_end(chars: &[char], start: usize, mut end: usize) -> usize {
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    end
}

/// Splits with the default abbreviation guard list.
pub fn segment_sentences(doc: &SourceDocument) -> Result<SentenceMap, DocumentError> {
    Segmenter::default().segment(doc)
}

/// Paragraphs are the non-blank lines between newline markers, trimmed of
/// surrounding whitespace.
pub fn segment_paragraphs(doc: &SourceDocument) -> Vec<Range<usize>> {
    let chars: Vec<char> = doc.text().chars().collect();
    line_ranges(&chars)
        .into_iter()
        .filter_map(|line| {
            let start = skip_ws(&chars, line.start, line.end);
            let end = trim_end(&chars, start, line.end);
            (end > start).then_some(start..end)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranges(text: &str) -> Vec<(usize, usize)> {
        segment_sentences(&SourceDocument::new("t", text))
            .unwrap()
            .iter()
            .map(|s| (s.char_start, s.char_end))
            .collect()
    }

    #[test]
    fn terminal_punctuation_split() {
        assert_eq!(ranges("A. B? C!"), vec![(0, 2), (3, 5), (6, 8)]);
    }

    #[test]
    fn no_terminal_punctuation_is_one_sentence() {
        let text = "a sentence without an ending";
        assert_eq!(ranges(text), vec![(0, text.len())]);
    }

    #[test]
    fn empty_and_blank_documents_are_rejected() {
        for t in ["", "   \n\t "] {
            assert_eq!(
                segment_sentences(&SourceDocument::new("t", t)),
                Err(DocumentError::EmptyDocument)
            );
        }
    }

    #[test]
    fn abbreviation_guard_keeps_sentence_together() {
        let text = "Dr. Smith arrived. He left.";
        assert_eq!(ranges(text), vec![(0, 18), (19, 27)]);
        let bare = Segmenter::with_abbreviations(Vec::<String>::new());
        let map = bare.segment(&SourceDocument::new("t", text)).unwrap();
        assert_eq!(map.len(), 3);
    }

    #[test]
    fn newline_ends_sentence_and_advances_paragraph() {
        let doc = SourceDocument::new("t", "Title line\nFirst one. Second one.\n\nThird");
        let map = segment_sentences(&doc).unwrap();
        let texts: Vec<_> = (0..map.len()).map(|i| map.text(&doc, i)).collect();
        assert_eq!(texts, ["Title line", "First one.", "Second one.", "Third"]);
        let paras: Vec<_> = map.iter().map(|s| s.paragraph_index).collect();
        assert_eq!(paras, [0, 1, 1, 2]);
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        let doc = SourceDocument::new("t", "He said \"stop.\" Then (quietly!) he went.");
        let map = segment_sentences(&doc).unwrap();
        assert_eq!(map.text(&doc, 0), "He said \"stop.\"");
        assert_eq!(map.text(&doc, 1), "Then (quietly!) he went.");
    }

    #[test]
    fn decimals_and_ellipsis() {
        let doc = SourceDocument::new("t", "Pi is 3.14 roughly… Yes. Wait...");
        let map = segment_sentences(&doc).unwrap();
        assert_eq!(map.text(&doc, 0), "Pi is 3.14 roughly…");
        assert_eq!(map.text(&doc, 1), "Yes.");
        assert_eq!(map.text(&doc, 2), "Wait...");
    }

    #[test]
    fn paragraphs_collapse_blank_runs() {
        let p = |t: &str| segment_paragraphs(&SourceDocument::new("t", t));
        assert_eq!(p("p1\np2"), vec![0..2, 3..5]);
        assert_eq!(p("p1\n\n\np2"), vec![0..2, 5..7]);
        assert_eq!(p("no markers here"), vec![0..15]);
    }

    #[test]
    fn five_block_paragraph_document() {
        // blocks:  "One." [0,4)  "Two a. Two b." [5,18)  "Three." [20,26)
        //          "Four." [27,32)  "Five five." [35,45)
        let text = "One.\nTwo a. Two b.\n\nThree.\nFour.\n\n\nFive five.\n";
        let got = segment_paragraphs(&SourceDocument::new("t", text));
        assert_eq!(got, vec![0..4, 5..18, 20..26, 27..32, 35..45]);
        for r in &got {
            assert!(!text[r.clone()].contains('\n'));
        }
    }
}
