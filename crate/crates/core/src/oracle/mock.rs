//! Deterministic in-process oracles for tests and hermetic runs.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::{validate_boundary, validate_next, Encoding, Oracle, OracleError, TokenId, TokenSpace};

pub const EOS_PIECE: &str = "</s>";
pub const NEWLINE_PIECE: &str = "\n";

#[derive(Debug, Default)]
struct Vocab {
    pieces: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    fn intern(&mut self, piece: &str) -> TokenId {
        if let Some(&id) = self.index.get(piece) {
            return id;
        }
        let id = self.pieces.len() as TokenId;
        self.pieces.push(piece.to_owned());
        self.index.insert(piece.to_owned(), id);
        id
    }
}

/// Open-vocabulary word-level tokenizer.
///
/// A token is a run of alphanumeric characters, a single other non-space
/// character, or a newline. Tokens preceded by horizontal whitespace carry a
/// leading `' '` in their piece string; their char offsets cover only the
/// visible characters. Ids are assigned on first sight, so identical encode
/// sequences yield identical ids. `</s>` is id 0.
///
/// Decoding is exact whenever horizontal whitespace between tokens is a
/// single space; longer runs, tabs and `\r` decode as one space, and
/// whitespace directly before a newline is dropped.
#[derive(Debug)]
pub struct MockTokenSpace {
    vocab: RwLock<Vocab>,
}

impl Default for MockTokenSpace {
    fn default() -> Self {
        Self::new()
    }
}

impl MockTokenSpace {
    pub fn new() -> Self {
        let mut vocab = Vocab::default();
        vocab.intern(EOS_PIECE);
        vocab.intern(NEWLINE_PIECE);
        Self {
            vocab: RwLock::new(vocab),
        }
    }

    pub fn newline_id(&self) -> TokenId {
        1
    }

    pub fn piece(&self, id: TokenId) -> Option<String> {
        self.vocab.read().unwrap().pieces.get(id as usize).cloned()
    }

    /// Id of an existing piece, without interning.
    pub fn lookup(&self, piece: &str) -> Option<TokenId> {
        self.vocab.read().unwrap().index.get(piece).copied()
    }

    /// Interns `piece` and returns its id.
    pub fn intern(&self, piece: &str) -> TokenId {
        if let Some(id) = self.lookup(piece) {
            return id;
        }
        self.vocab.write().unwrap().intern(piece)
    }

    /// Splits `text` into `(piece, char_start, char_end)` without touching
    /// the vocabulary.
    pub fn pieces(text: &str) -> Vec<(String, usize, usize)> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut space = false;
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '\n' {
                out.push((NEWLINE_PIECE.to_owned(), i, i + 1));
                space = false;
                i += 1;
            } else if c.is_whitespace() {
                space = true;
                i += 1;
            } else {
                let start = i;
                if is_word_char(c) {
                    while i < chars.len() && is_word_char(chars[i]) {
                        i += 1;
                    }
                } else {
                    i += 1;
                }
                let mut piece = String::with_capacity(i - start + 1);
                if space {
                    piece.push(' ');
                }
                piece.extend(&chars[start..i]);
                out.push((piece, start, i));
                space = false;
            }
        }
        out
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl TokenSpace for MockTokenSpace {
    fn vocab_size(&self) -> usize {
        self.vocab.read().unwrap().pieces.len()
    }

    fn eos_id(&self) -> TokenId {
        0
    }

    fn encode(&self, text: &str) -> Result<Encoding, OracleError> {
        let pieces = Self::pieces(text);
        let mut ids = Vec::with_capacity(pieces.len());
        let mut offsets = Vec::with_capacity(pieces.len());
        let missing = {
            let vocab = self.vocab.read().unwrap();
            pieces.iter().any(|(p, _, _)| !vocab.index.contains_key(p))
        };
        if missing {
            let mut vocab = self.vocab.write().unwrap();
            for (p, a, b) in pieces {
                ids.push(vocab.intern(&p));
                offsets.push((a, b));
            }
        } else {
            let vocab = self.vocab.read().unwrap();
            for (p, a, b) in pieces {
                ids.push(vocab.index[&p]);
                offsets.push((a, b));
            }
        }
        Ok(Encoding { ids, offsets })
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String, OracleError> {
        let vocab = self.vocab.read().unwrap();
        let mut out = String::new();
        for &id in ids {
            if id == 0 {
                continue;
            }
            let piece = vocab
                .pieces
                .get(id as usize)
                .ok_or_else(|| OracleError::InvalidRequest(format!("unknown token id {id}")))?;
            out.push_str(piece);
        }
        Ok(out)
    }
}

/// Explicit context → distribution table, keyed by the full context.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Script {
    pub entries: Vec<ScriptEntry>,
    /// Used for contexts without an entry; absent means such contexts fail.
    #[serde(default)]
    pub default: Option<BTreeMap<TokenId, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub context: Vec<TokenId>,
    pub logprobs: BTreeMap<TokenId, f64>,
}

/// Table-lookup oracle. Candidates missing from a distribution get `-inf`.
pub struct ScriptedOracle {
    space: Arc<dyn TokenSpace>,
    table: HashMap<Vec<TokenId>, BTreeMap<TokenId, f64>>,
    default: Option<BTreeMap<TokenId, f64>>,
}

impl ScriptedOracle {
    pub fn new(space: Arc<dyn TokenSpace>) -> Self {
        Self {
            space,
            table: HashMap::new(),
            default: None,
        }
    }

    pub fn from_script(space: Arc<dyn TokenSpace>, script: Script) -> Self {
        let mut oracle = Self::new(space);
        for e in script.entries {
            oracle.table.insert(e.context, e.logprobs);
        }
        oracle.default = script.default;
        oracle
    }

    pub fn insert(&mut self, context: Vec<TokenId>, logprobs: BTreeMap<TokenId, f64>) {
        self.table.insert(context, logprobs);
    }

    pub fn set_default(&mut self, logprobs: BTreeMap<TokenId, f64>) {
        self.default = Some(logprobs);
    }

    fn lookup(&self, context: &[TokenId]) -> Result<&BTreeMap<TokenId, f64>, OracleError> {
        self.table
            .get(context)
            .or(self.default.as_ref())
            .ok_or(OracleError::Unscripted(context.len()))
    }
}

impl Oracle for ScriptedOracle {
    fn token_space(&self) -> &dyn TokenSpace {
        self.space.as_ref()
    }

    fn next_logprobs(
        &self,
        context: &[TokenId],
        candidates: Option<&[TokenId]>,
    ) -> Result<BTreeMap<TokenId, f64>, OracleError> {
        validate_next(context, candidates, self.space.vocab_size())?;
        let dist = self.lookup(context)?;
        Ok(match candidates {
            None => dist.clone(),
            Some(c) => c
                .iter()
                .map(|t| (*t, dist.get(t).copied().unwrap_or(f64::NEG_INFINITY)))
                .collect(),
        })
    }

    fn boundary_eos_logprobs(
        &self,
        context: &[TokenId],
        continuation: &[TokenId],
        offsets: &[usize],
    ) -> Result<Vec<f64>, OracleError> {
        validate_boundary(context, continuation, offsets)?;
        let eos = self.space.eos_id();
        let mut probe = context.to_vec();
        let mut consumed = 0;
        offsets
            .iter()
            .map(|&o| {
                probe.extend_from_slice(&continuation[consumed..o]);
                consumed = o;
                Ok(self
                    .lookup(&probe)?
                    .get(&eos)
                    .copied()
                    .unwrap_or(f64::NEG_INFINITY))
            })
            .collect()
    }
}
