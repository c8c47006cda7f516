use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mean, DecodeConfig, DecodeError, DecodeMode, PrefixCandidate};
use crate::oracle::{Oracle, TokenId};
use crate::trie::{PrefixTrie, TriePath};

/// Output of constrained prefix decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixDecoding {
    /// Best `k`, ranked.
    pub candidates: Vec<PrefixCandidate>,
    /// Every finished candidate, ranked.
    pub all_candidates: Vec<PrefixCandidate>,
    pub oracle_calls: usize,
}

impl PrefixDecoding {
    pub fn candidates_expanded(&self) -> usize {
        self.all_candidates.len()
    }

    pub fn beta_per_candidate(&self) -> Vec<usize> {
        self.all_candidates
            .iter()
            .map(PrefixCandidate::beta)
            .collect()
    }
}

#[derive(Clone)]
struct Partial {
    path: TriePath,
    logprobs: Vec<f64>,
}

impl Partial {
    fn score(&self) -> f64 {
        mean(&self.logprobs)
    }
}

enum Item {
    Done(PrefixCandidate),
    Open(Partial),
}

impl Item {
    fn score(&self) -> f64 {
        match self {
            Item::Done(c) => c.score,
            Item::Open(p) => p.score(),
        }
    }

    fn tokens(&self) -> &[TokenId] {
        match self {
            Item::Done(c) => &c.token_ids,
            Item::Open(p) => p.path.tokens(),
        }
    }
}

/// Ranking used everywhere candidates are ordered: score descending, then
/// token ids ascending.
pub fn rank_candidates(cands: &mut [PrefixCandidate]) {
    cands.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.token_ids.cmp(&b.token_ids))
    });
}

fn finish(p: &Partial, resolved: &[usize]) -> PrefixCandidate {
    PrefixCandidate {
        token_ids: p.path.tokens().to_vec(),
        per_token_logprobs: p.logprobs.clone(),
        score: p.score(),
        resolved_sentence: resolved[0],
        alternates: resolved[1..].to_vec(),
    }
}

/// Sorts an item frontier for pruning and stable iteration order.
fn rank_items(items: &mut [Item]) {
    items.sort_by(|a, b| {
        b.score()
            .total_cmp(&a.score())
            .then_with(|| a.tokens().cmp(b.tokens()))
            .then_with(|| match (a, b) {
                (Item::Done(_), Item::Open(_)) => Ordering::Less,
                (Item::Open(_), Item::Done(_)) => Ordering::Greater,
                _ => Ordering::Equal,
            })
    });
}

/// Picks `k` of `allowed` (ascending ids) given their logprobs.
fn select(
    allowed: &[TokenId],
    logprobs: &[f64],
    k: usize,
    rng: Option<&mut ChaCha8Rng>,
) -> Vec<(TokenId, f64)> {
    let mut keyed: Vec<(f64, TokenId, f64)> = match rng {
        None => allowed
            .iter()
            .zip(logprobs)
            .map(|(&t, &lp)| (lp, t, lp))
            .collect(),
        Some(rng) => allowed
            .iter()
            .zip(logprobs)
            .map(|(&t, &lp)| {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                (lp - (-u.ln()).ln(), t, lp)
            })
            .collect(),
    };
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.truncate(k);
    keyed.into_iter().map(|(_, t, lp)| (t, lp)).collect()
}

/// Constrained top-k sentence-prefix decoding.
///
/// Every in-progress prefix is expanded with its `k` best allowed next
/// tokens (one oracle call per prefix) until it identifies a single
/// sentence, reaches a trie leaf, or hits `max_beta`. A prefix at which some
/// sentence ends also yields a finished candidate for that sentence while
/// expansion continues. The pool of finished plus in-progress prefixes is
/// held to `max_candidates_expanded` by dropping the lowest running means.
pub fn decode_prefix_candidates(
    trie: &PrefixTrie,
    oracle: &dyn Oracle,
    prompt_context: &[TokenId],
    cfg: &DecodeConfig,
) -> Result<PrefixDecoding, DecodeError> {
    cfg.validate()?;
    let root = trie.root();
    if trie.allowed_tokens(&root)?.is_empty() {
        return Err(DecodeError::NoCandidates);
    }
    let mut rng = match cfg.mode {
        DecodeMode::Deterministic => None,
        DecodeMode::Stochastic { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };

    let mut done: Vec<PrefixCandidate> = Vec::new();
    let mut frontier = vec![Partial {
        path: root,
        logprobs: Vec::new(),
    }];
    let mut calls = 0;
    let mut context = prompt_context.to_vec();

    while !frontier.is_empty() {
        let mut items = Vec::new();
        for p in &frontier {
            let allowed = trie.allowed_tokens(&p.path)?;
            context.truncate(prompt_context.len());
            context.extend_from_slice(p.path.tokens());
            let lps = oracle.next_logprobs(&context, Some(&allowed))?;
            calls += 1;
            let lps: Vec<f64> = allowed
                .iter()
                .map(|t| lps.get(t).copied().unwrap_or(f64::NEG_INFINITY))
                .collect();

            for (t, lp) in select(&allowed, &lps, cfg.k, rng.as_mut()) {
                let mut child = Partial {
                    path: trie.step(&p.path, t)?,
                    logprobs: p.logprobs.clone(),
                };
                child.logprobs.push(lp);
                let matched = trie.matched(&child.path)?;
                if matched.len() == 1
                    || trie.is_leaf(&child.path)?
                    || child.path.depth() >= cfg.max_beta
                {
                    items.push(Item::Done(finish(&child, matched)));
                } else {
                    let ending = trie.ending(&child.path)?;
                    if !ending.is_empty() {
                        items.push(Item::Done(finish(&child, ending)));
                    }
                    items.push(Item::Open(child));
                }
            }
        }

        rank_items(&mut items);
        items.truncate(cfg.max_candidates_expanded.saturating_sub(done.len()));
        frontier.clear();
        for item in items {
            match item {
                Item::Done(c) => done.push(c),
                Item::Open(p) => frontier.push(p),
            }
        }
    }

    rank_candidates(&mut done);
    let candidates = done.iter().take(cfg.k).cloned().collect();
    Ok(PrefixDecoding {
        candidates,
        all_candidates: done,
        oracle_calls: calls,
    })
}
