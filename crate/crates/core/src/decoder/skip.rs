use super::{DecodeConfig, DecodeError, DocumentIndex, EvidenceSpan, PrefixCandidate};
use crate::oracle::{Oracle, TokenId};

/// Terminates a resolved prefix at the sentence boundary with the highest
/// `[eos]` log-probability.
///
/// Boundaries are the ends of the start sentence and the sentences after it,
/// as long as the continuation beyond the prefix stays within `d` tokens.
/// All boundaries are probed with one oracle call; ties go to the earlier
/// boundary. When the start sentence alone exceeds `d`, its end is the only
/// boundary and the span is flagged `truncated`.
pub fn skip_decode(
    cand: &PrefixCandidate,
    index: &DocumentIndex<'_>,
    oracle: &dyn Oracle,
    prompt_context: &[TokenId],
    cfg: &DecodeConfig,
) -> Result<EvidenceSpan, DecodeError> {
    let view = &index.view;
    let start = cand.resolved_sentence;
    if start >= view.len() {
        return Err(DecodeError::InvalidCandidate(format!(
            "sentence {start} out of range ({} sentences)",
            view.len()
        )));
    }
    let first = view.tokens(start);
    let beta = cand.beta();
    if first.len() < beta || first[..beta] != cand.token_ids[..] {
        return Err(DecodeError::InvalidCandidate(format!(
            "prefix is not the start of sentence {start}"
        )));
    }

    let mut continuation: Vec<TokenId> = first[beta..].to_vec();
    let mut offsets = vec![continuation.len()];
    let mut ends = vec![start];
    let truncated = continuation.len() > cfg.d;
    if !truncated {
        for j in start + 1..view.len() {
            let next = view.tokens(j);
            if continuation.len() + next.len() > cfg.d {
                break;
            }
            continuation.extend_from_slice(next);
            offsets.push(continuation.len());
            ends.push(j);
        }
    }

    let mut context = Vec::with_capacity(prompt_context.len() + beta);
    context.extend_from_slice(prompt_context);
    context.extend_from_slice(&cand.token_ids);
    let eos = oracle.boundary_eos_logprobs(&context, &continuation, &offsets)?;
    if eos.len() != offsets.len() {
        return Err(DecodeError::InvalidCandidate(format!(
            "oracle returned {} eos values for {} boundaries",
            eos.len(),
            offsets.len()
        )));
    }

    let mut best = 0;
    for (i, v) in eos.iter().enumerate().skip(1) {
        if v.total_cmp(&eos[best]).is_gt() {
            best = i;
        }
    }

    let end = ends[best];
    let s = index.sentences.sentences[start];
    let e = index.sentences.sentences[end];
    Ok(EvidenceSpan {
        doc_id: index.doc.doc_id().to_owned(),
        char_start: s.char_start,
        char_end: e.char_end,
        start_sentence: start,
        end_sentence: end,
        text: index.doc.slice_chars(s.char_start..e.char_end).to_owned(),
        prefix_score: cand.score,
        eos_logprob: eos[best],
        truncated,
        continuation_tokens: offsets[best],
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::decoder::mean;
    use crate::document::{segment_sentences, SourceDocument};
    use crate::oracle::mock::{MockTokenSpace, ScriptedOracle};
    use crate::oracle::TokenSpace;

    fn setup(text: &str) -> (Arc<MockTokenSpace>, SourceDocument) {
        (
            Arc::new(MockTokenSpace::new()),
            SourceDocument::new("doc", text),
        )
    }

    fn candidate(index: &DocumentIndex<'_>, sentence: usize, beta: usize) -> PrefixCandidate {
        let toks = index.view.tokens(sentence)[..beta].to_vec();
        let lps = vec![-0.5; beta];
        PrefixCandidate {
            score: mean(&lps),
            token_ids: toks,
            per_token_logprobs: lps,
            resolved_sentence: sentence,
            alternates: vec![],
        }
    }

    /// Scripts eos logprobs for every boundary of `cand` from `values`.
    fn script_eos(
        oracle: &mut ScriptedOracle,
        index: &DocumentIndex<'_>,
        ctx: &[TokenId],
        cand: &PrefixCandidate,
        values: &[f64],
    ) {
        let mut probe = [ctx, &cand.token_ids[..]].concat();
        probe.extend_from_slice(&index.view.tokens(cand.resolved_sentence)[cand.beta()..]);
        for (k, &v) in values.iter().enumerate() {
            if k > 0 {
                probe.extend_from_slice(index.view.tokens(cand.resolved_sentence + k));
            }
            oracle.insert(probe.clone(), [(0, v)].into_iter().collect());
        }
    }

    #[test]
    fn last_sentence_has_one_boundary() {
        let (space, doc) = setup("First one here. Second one here. Last one.");
        let index =
            DocumentIndex::build(&doc, segment_sentences(&doc).unwrap(), space.as_ref(), 16)
                .unwrap();
        let ctx = vec![space.intern("<ctx>")];
        let cand = candidate(&index, 2, 1);
        let mut oracle = ScriptedOracle::new(space.clone());
        script_eos(&mut oracle, &index, &ctx, &cand, &[-2.0]);
        let span = skip_decode(&cand, &index, &oracle, &ctx, &DecodeConfig::default()).unwrap();
        assert_eq!(span.text, "Last one.");
        assert_eq!((span.start_sentence, span.end_sentence), (2, 2));
    }

    #[test]
    fn argmax_boundary_wins() {
        let (space, doc) = setup("Alpha starts here. Beta follows on. Gamma ends it. Delta after.");
        let index =
            DocumentIndex::build(&doc, segment_sentences(&doc).unwrap(), space.as_ref(), 16)
                .unwrap();
        let ctx = vec![space.intern("<ctx>")];
        let cand = candidate(&index, 0, 2);
        let mut oracle = ScriptedOracle::new(space.clone());
        script_eos(&mut oracle, &index, &ctx, &cand, &[-3.0, -0.7, -1.2, -4.0]);
        let span = skip_decode(&cand, &index, &oracle, &ctx, &DecodeConfig::default()).unwrap();
        assert_eq!(span.end_sentence, 1);
        assert_eq!(span.text, "Alpha starts here. Beta follows on.");
        assert_eq!(span.eos_logprob, -0.7);
    }

    #[test]
    fn ties_go_to_earlier_boundary() {
        let (space, doc) = setup("Alpha starts here. Beta follows on. Gamma ends it.");
        let index =
            DocumentIndex::build(&doc, segment_sentences(&doc).unwrap(), space.as_ref(), 16)
                .unwrap();
        let ctx = vec![space.intern("<ctx>")];
        let cand = candidate(&index, 0, 1);
        let mut oracle = ScriptedOracle::new(space.clone());
        script_eos(&mut oracle, &index, &ctx, &cand, &[-2.0, -1.0, -1.0]);
        let span = skip_decode(&cand, &index, &oracle, &ctx, &DecodeConfig::default()).unwrap();
        assert_eq!(span.end_sentence, 1);
    }

    #[test]
    fn d_limits_boundaries() {
        // each sentence is 4 tokens
        let (space, doc) =
            setup("One two three. Four five six. Seven eight nine. Ten eleven twelve.");
        let index =
            DocumentIndex::build(&doc, segment_sentences(&doc).unwrap(), space.as_ref(), 16)
                .unwrap();
        let ctx = vec![space.intern("<ctx>")];
        let cand = candidate(&index, 0, 1);
        let mut oracle = ScriptedOracle::new(space.clone());
        // eos would favour the last boundary, but d = 7 admits offsets 3 and 7 only
        script_eos(&mut oracle, &index, &ctx, &cand, &[-3.0, -2.0, -1.0, -0.1]);
        let cfg = DecodeConfig {
            d: 7,
            ..Default::default()
        };
        let span = skip_decode(&cand, &index, &oracle, &ctx, &cfg).unwrap();
        assert_eq!(span.end_sentence, 1);
        assert_eq!(span.continuation_tokens, 7);
        assert!(!span.truncated);
    }

    #[test]
    fn overlong_start_sentence_is_truncated_and_flagged() {
        let (space, doc) = setup("This opening sentence is rather long indeed. Short.");
        let index =
            DocumentIndex::build(&doc, segment_sentences(&doc).unwrap(), space.as_ref(), 16)
                .unwrap();
        let ctx = vec![space.intern("<ctx>")];
        let cand = candidate(&index, 0, 1);
        let mut oracle = ScriptedOracle::new(space.clone());
        script_eos(&mut oracle, &index, &ctx, &cand, &[-1.0]);
        let cfg = DecodeConfig {
            d: 3,
            ..Default::default()
        };
        let span = skip_decode(&cand, &index, &oracle, &ctx, &cfg).unwrap();
        assert!(span.truncated);
        assert_eq!(span.text, "This opening sentence is rather long indeed.");
    }

    #[test]
    fn rejects_mismatched_prefix() {
        let (space, doc) = setup("Alpha one. Beta two.");
        let index =
            DocumentIndex::build(&doc, segment_sentences(&doc).unwrap(), space.as_ref(), 16)
                .unwrap();
        let mut cand = candidate(&index, 0, 1);
        cand.resolved_sentence = 1;
        let oracle = ScriptedOracle::new(space.clone());
        let err = skip_decode(
            &cand,
            &index,
            &oracle,
            &[space.eos_id()],
            &DecodeConfig::default(),
        );
        assert!(matches!(err, Err(DecodeError::InvalidCandidate(_))));
    }
}
