use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use super::mock::MockTokenSpace;
use super::{validate_boundary, validate_next, Oracle, OracleError, TokenId, TokenSpace};
use crate::document::{segment_sentences, SourceDocument};
use crate::text;

const BEGIN_MARKER: &str = "Now the article begins:\n";
const END_MARKER: &str = "\nNow the article ends.\n";
const QUESTION_MARKER: &str = "\nQuestion:";
const CACHE_SLOTS: usize = 8;

/// Parameters of [`RelevanceOracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceConfig {
    /// Sentence weight is `boost ^ (distinct query terms in the sentence)`.
    pub boost: f64,
    /// Interpolation weight of the Laplace-smoothed document unigram.
    pub smoothing: f64,
    pub eos_floor: f64,
    pub eos_ceiling: f64,
    /// Query-term hits at which `[eos]` covers ~63% of the floor→ceiling range.
    pub eos_scale: f64,
    /// Factor applied to the `[eos]` growth term per distinct query term in
    /// the sentence that would follow.
    pub eos_lookahead: f64,
    /// Factor applied to the `[eos]` growth term per completed sentence in
    /// the generated span that shares no query term.
    pub eos_dilution: f64,
    pub max_context: Option<usize>,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        Self {
            boost: 4.0,
            smoothing: 0.05,
            eos_floor: 1e-3,
            eos_ceiling: 0.95,
            eos_scale: 4.0,
            eos_lookahead: 0.25,
            eos_dilution: 0.25,
            max_context: None,
        }
    }
}

impl RelevanceConfig {
    /// Plain count model: no query boost, no smoothing, never `[eos]`.
    pub fn unigram() -> Self {
        Self {
            boost: 1.0,
            smoothing: 0.0,
            eos_floor: 0.0,
            eos_ceiling: 0.0,
            ..Self::default()
        }
    }
}

/// Document-aware mock language model.
///
/// The oracle reads the article and question back out of the rendered
/// prompt in its context. Given the tokens generated so far `g`, the next
/// token is drawn from the sentences whose token stream (the sentence
/// followed by the rest of the document) starts with `g`, each weighted by
/// its query overlap, interpolated with a smoothed unigram over the article.
/// `[eos]` probability grows with the number of query-term tokens in `g`.
pub struct RelevanceOracle {
    space: Arc<MockTokenSpace>,
    cfg: RelevanceConfig,
    markers: Markers,
    cache: Mutex<Vec<(u64, Arc<Parsed>)>>,
}

struct Markers {
    begin: Vec<TokenId>,
    end: Vec<TokenId>,
    question: Vec<TokenId>,
    newline: TokenId,
}

struct Parsed {
    stream: Vec<TokenId>,
    starts: Vec<usize>,
    weights: Vec<f64>,
    overlaps: Vec<usize>,
    counts: HashMap<TokenId, f64>,
    total: f64,
    query_terms: HashSet<String>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Placement {
    /// Query overlap of the sentence that would follow; 0 mid-sentence.
    ahead: usize,
    /// Completed sentences without any query term.
    idle: usize,
}

struct View<'c> {
    parsed: Arc<Parsed>,
    generated: &'c [TokenId],
}

impl RelevanceOracle {
    pub fn new(space: Arc<MockTokenSpace>, cfg: RelevanceConfig) -> Self {
        let enc = |s: &str| space.encode(s).expect("mock encode").ids;
        let markers = Markers {
            begin: enc(BEGIN_MARKER),
            end: enc(END_MARKER),
            question: enc(QUESTION_MARKER),
            newline: space.newline_id(),
        };
        Self {
            space,
            cfg,
            markers,
            cache: Mutex::new(Vec::new()),
        }
    }

    pub fn config(&self) -> &RelevanceConfig {
        &self.cfg
    }

    pub fn mock_space(&self) -> &Arc<MockTokenSpace> {
        &self.space
    }

    fn check_len(&self, len: usize) -> Result<(), OracleError> {
        match self.cfg.max_context {
            Some(max) if len > max => Err(OracleError::ContextTooLong(format!(
                "{len} tokens exceeds the configured maximum of {max}"
            ))),
            _ => Ok(()),
        }
    }

    fn view<'c>(&self, context: &'c [TokenId]) -> Result<View<'c>, OracleError> {
        let m = &self.markers;
        let q = rfind(context, &m.question).ok_or_else(|| {
            OracleError::InvalidRequest("context does not contain a rendered prompt".into())
        })?;
        let q_body = q + m.question.len();
        let gen_start = context[q_body..]
            .iter()
            .position(|&t| t == m.newline)
            .map_or(context.len(), |p| q_body + p + 1);

        let prompt = &context[..gen_start];
        let mut h = DefaultHasher::new();
        prompt.hash(&mut h);
        let key = h.finish();

        let cached = {
            let cache = self.cache.lock().unwrap();
            cache
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, p)| p.clone())
        };
        let parsed = match cached {
            Some(p) => p,
            None => {
                let q_end = if gen_start > q_body && context[gen_start - 1] == m.newline {
                    gen_start - 1
                } else {
                    gen_start
                };
                let parsed = Arc::new(self.parse(&context[..q], &context[q_body..q_end])?);
                let mut cache = self.cache.lock().unwrap();
                if cache.len() == CACHE_SLOTS {
                    cache.remove(0);
                }
                cache.push((key, parsed.clone()));
                parsed
            }
        };
        Ok(View {
            parsed,
            generated: &context[gen_start..],
        })
    }

    fn parse(&self, head: &[TokenId], question: &[TokenId]) -> Result<Parsed, OracleError> {
        let m = &self.markers;
        let a0 = find(head, &m.begin)
            .map(|p| p + m.begin.len())
            .ok_or_else(|| OracleError::InvalidRequest("article begin marker missing".into()))?;
        let a1 = rfind(&head[a0..], &m.end)
            .map(|p| a0 + p)
            .ok_or_else(|| OracleError::InvalidRequest("article end marker missing".into()))?;

        let article = self.space.decode(&head[a0..a1])?;
        let question = self.space.decode(question)?;
        let query_terms: HashSet<String> = text::content_words(&question).collect();

        let doc = SourceDocument::new("oracle", article);
        let map = if doc.is_blank() {
            Default::default()
        } else {
            segment_sentences(&doc).map_err(|e| OracleError::InvalidRequest(e.to_string()))?
        };

        let mut stream = Vec::new();
        let mut starts = Vec::with_capacity(map.len());
        let mut weights = Vec::with_capacity(map.len());
        let mut overlaps = Vec::with_capacity(map.len());
        for i in 0..map.len() {
            let sentence = map.text(&doc, i);
            starts.push(stream.len());
            stream.extend(self.space.encode(sentence)?.ids);
            let overlap = text::content_words(sentence)
                .collect::<HashSet<_>>()
                .intersection(&query_terms)
                .count();
            weights.push(self.cfg.boost.powi(overlap as i32));
            overlaps.push(overlap);
        }
        let mut counts = HashMap::new();
        for &t in &stream {
            *counts.entry(t).or_insert(0.0) += 1.0;
        }
        Ok(Parsed {
            total: stream.len() as f64,
            stream,
            starts,
            weights,
            overlaps,
            counts,
            query_terms,
        })
    }

    fn is_query_term(&self, parsed: &Parsed, token: TokenId) -> bool {
        let Some(piece) = self.space.piece(token) else {
            return false;
        };
        let word = piece.trim_start().to_lowercase();
        parsed.query_terms.contains(&word)
    }

    fn eos_prob(&self, hits: usize, place: Placement) -> f64 {
        let c = &self.cfg;
        let growth = (1.0 - (-(hits as f64) / c.eos_scale).exp())
            * c.eos_lookahead.powi(place.ahead as i32)
            * c.eos_dilution.powi(place.idle as i32);
        c.eos_floor + (c.eos_ceiling - c.eos_floor) * growth
    }

    /// Locates `generated` in the earliest stream it continues.
    fn place(parsed: &Parsed, generated: &[TokenId]) -> Placement {
        let n = generated.len();
        let Some(first) = parsed
            .starts
            .iter()
            .position(|&s| parsed.stream.len() >= s + n && parsed.stream[s..s + n] == *generated)
        else {
            return Placement::default();
        };
        let end = parsed.starts[first] + n;
        let done = parsed.starts[first..].partition_point(|&s| s < end);
        let completed =
            if parsed.starts.get(first + done) == Some(&end) || end == parsed.stream.len() {
                done
            } else {
                done - 1
            };
        Placement {
            ahead: parsed
                .starts
                .binary_search(&end)
                .map_or(0, |j| parsed.overlaps[j]),
            idle: parsed.overlaps[first..first + completed]
                .iter()
                .filter(|&&o| o == 0)
                .count(),
        }
    }

    fn hits(&self, parsed: &Parsed, tokens: &[TokenId]) -> usize {
        tokens
            .iter()
            .filter(|&&t| self.is_query_term(parsed, t))
            .count()
    }

    /// Weighted next-token mass over streams continuing `generated`.
    fn continuation_mass(parsed: &Parsed, generated: &[TokenId]) -> (HashMap<TokenId, f64>, f64) {
        let mut mass = HashMap::new();
        let mut total = 0.0;
        let n = generated.len();
        for (&start, &w) in parsed.starts.iter().zip(&parsed.weights) {
            let s = &parsed.stream[start..];
            if s.len() > n && &s[..n] == generated {
                *mass.entry(s[n]).or_insert(0.0) += w;
                total += w;
            }
        }
        (mass, total)
    }
}

impl Oracle for RelevanceOracle {
    fn token_space(&self) -> &dyn TokenSpace {
        self.space.as_ref()
    }

    fn next_logprobs(
        &self,
        context: &[TokenId],
        candidates: Option<&[TokenId]>,
    ) -> Result<BTreeMap<TokenId, f64>, OracleError> {
        self.check_len(context.len())?;
        // parsing may intern sentence-initial pieces, so size the vocabulary after it
        let view = self.view(context)?;
        let vocab = self.space.vocab_size();
        validate_next(context, candidates, vocab)?;
        let p = &view.parsed;

        let eos_id = self.space.eos_id();
        let eos = self.eos_prob(self.hits(p, view.generated), Self::place(p, view.generated));
        let (mass, mass_total) = Self::continuation_mass(p, view.generated);
        let lambda = if mass_total > 0.0 {
            self.cfg.smoothing
        } else {
            1.0
        };
        let unigram_den = p.total + (vocab - 1) as f64;

        let prob = |t: TokenId| -> f64 {
            if t == eos_id {
                return eos;
            }
            let doc = if mass_total > 0.0 {
                mass.get(&t).copied().unwrap_or(0.0) / mass_total
            } else {
                0.0
            };
            let uni = (p.counts.get(&t).copied().unwrap_or(0.0) + 1.0) / unigram_den;
            (1.0 - eos) * ((1.0 - lambda) * doc + lambda * uni)
        };

        let all: Vec<TokenId>;
        let cands = match candidates {
            Some(c) => c,
            None => {
                all = (0..vocab as TokenId).collect();
                &all
            }
        };
        Ok(cands.iter().map(|&t| (t, prob(t).ln())).collect())
    }

    fn boundary_eos_logprobs(
        &self,
        context: &[TokenId],
        continuation: &[TokenId],
        offsets: &[usize],
    ) -> Result<Vec<f64>, OracleError> {
        validate_boundary(context, continuation, offsets)?;
        self.check_len(context.len() + offsets[offsets.len() - 1])?;
        let view = self.view(context)?;
        let p = &view.parsed;
        let mut generated = view.generated.to_vec();
        let mut hits = self.hits(p, view.generated);
        let mut consumed = 0;
        Ok(offsets
            .iter()
            .map(|&o| {
                let step = &continuation[consumed..o];
                hits += self.hits(p, step);
                generated.extend_from_slice(step);
                consumed = o;
                self.eos_prob(hits, Self::place(p, &generated)).ln()
            })
            .collect())
    }
}

fn find(hay: &[TokenId], needle: &[TokenId]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

fn rfind(hay: &[TokenId], needle: &[TokenId]) -> Option<usize> {
    hay.windows(needle.len()).rposition(|w| w == needle)
}
