use super::EvidenceSpan;
use crate::document::{SentenceMap, SourceDocument};

/// Merges overlapping or sentence-adjacent spans, then keeps the `k` best.
///
/// Spans are treated as sentence-index intervals. A merged span keeps the
/// highest constituent score and that constituent's `eos_logprob`. Output
/// is ordered by score descending, ties to the earlier span.
pub fn rank_and_merge(
    doc: &SourceDocument,
    sentences: &SentenceMap,
    mut spans: Vec<EvidenceSpan>,
    k: usize,
) -> Vec<EvidenceSpan> {
    spans.sort_by_key(|s| (s.start_sentence, s.end_sentence));
    let mut merged: Vec<EvidenceSpan> = Vec::with_capacity(spans.len());
    for span in spans {
        match merged.last_mut() {
            Some(cur) if span.start_sentence <= cur.end_sentence + 1 => {
                if span.end_sentence > cur.end_sentence {
                    cur.end_sentence = span.end_sentence;
                    cur.char_end = span.char_end;
                    cur.continuation_tokens = cur.continuation_tokens.max(span.continuation_tokens);
                }
                if span.prefix_score.total_cmp(&cur.prefix_score).is_gt() {
                    cur.prefix_score = span.prefix_score;
                    cur.eos_logprob = span.eos_logprob;
                }
                cur.truncated |= span.truncated;
            }
            _ => merged.push(span),
        }
    }
    for m in &mut merged {
        m.char_start = sentences.sentences[m.start_sentence].char_start;
        m.char_end = sentences.sentences[m.end_sentence].char_end;
        m.text = doc.slice_chars(m.char_start..m.char_end).to_owned();
    }
    merged.sort_by(|a, b| {
        b.prefix_score
            .total_cmp(&a.prefix_score)
            .then(a.start_sentence.cmp(&b.start_sentence))
    });
    merged.truncate(k);
    merged
}
