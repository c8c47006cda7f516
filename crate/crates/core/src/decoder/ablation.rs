use super::{mean, DecodeError, DocumentIndex, PrefixCandidate};
use crate::oracle::{Oracle, TokenId};

/// Tokens generated per unconstrained beam.
pub const ABLATION_SEQUENCE_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct AblationOutcome {
    /// Matched sequences, best beam first, at most one per sentence.
    pub candidates: Vec<PrefixCandidate>,
    /// Beams that matched no sentence start.
    pub unmatched: usize,
    pub oracle_calls: usize,
}

#[derive(Clone)]
struct Beam {
    tokens: Vec<TokenId>,
    logprobs: Vec<f64>,
    total: f64,
}

/// Beam search of width `k` over the full vocabulary (no trie), then maps
/// each sequence back to the earliest sentence whose token stream starts
/// with it.
pub fn ablation_unconstrained_prefix(
    index: &DocumentIndex<'_>,
    oracle: &dyn Oracle,
    prompt_context: &[TokenId],
    k: usize,
) -> Result<AblationOutcome, DecodeError> {
    if k == 0 {
        return Err(DecodeError::InvalidConfig("k must be >= 1".into()));
    }
    let eos = oracle.token_space().eos_id();
    let mut beams = vec![Beam {
        tokens: Vec::new(),
        logprobs: Vec::new(),
        total: 0.0,
    }];
    let mut calls = 0;
    for _ in 0..ABLATION_SEQUENCE_LEN {
        let mut next = Vec::with_capacity(beams.len() * k);
        for beam in &beams {
            let ctx = [prompt_context, &beam.tokens[..]].concat();
            let lps = oracle.next_logprobs(&ctx, None)?;
            calls += 1;
            let mut ranked: Vec<(TokenId, f64)> = lps
                .into_iter()
                .filter(|&(t, lp)| t != eos && lp.is_finite())
                .collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for (t, lp) in ranked.into_iter().take(k) {
                let mut b = beam.clone();
                b.tokens.push(t);
                b.logprobs.push(lp);
                b.total += lp;
                next.push(b);
            }
        }
        next.sort_by(|a, b| {
            b.total
                .total_cmp(&a.total)
                .then_with(|| a.tokens.cmp(&b.tokens))
        });
        next.truncate(k);
        if next.is_empty() {
            break;
        }
        beams = next;
    }

    let mut candidates: Vec<PrefixCandidate> = Vec::new();
    let mut unmatched = 0;
    for beam in beams {
        let n = beam.tokens.len();
        let hit = (0..index.view.len()).find(|&i| index.view.stream_from(i, n) == beam.tokens);
        match hit {
            Some(i) if !candidates.iter().any(|c| c.resolved_sentence == i) => {
                candidates.push(PrefixCandidate {
                    score: mean(&beam.logprobs),
                    token_ids: beam.tokens,
                    per_token_logprobs: beam.logprobs,
                    resolved_sentence: i,
                    alternates: Vec::new(),
                })
            }
            Some(_) => {}
            None => unmatched += 1,
        }
    }
    Ok(AblationOutcome {
        candidates,
        unmatched,
        oracle_calls: calls,
    })
}
