//! Token-logprob oracle contract.
//!
//! The engine never sees model internals. Everything it needs from a
//! language model is a next-token log-probability for a set of candidate
//! tokens, and the `[eos]` log-probability at a list of positions inside a
//! teacher-forced continuation. Log-probabilities are natural logs.

pub mod mock;
mod relevance;
pub mod remote;
pub mod wire;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use relevance::{RelevanceConfig, RelevanceOracle};

pub type TokenId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid oracle request: {0}")]
    InvalidRequest(String),
    #[error("context too long: {0}")]
    ContextTooLong(String),
    #[error("no scripted distribution for context of {0} tokens")]
    Unscripted(usize),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("oracle server error ({status}): {message}")]
    Server { status: u16, message: String },
    #[error("malformed oracle response: {0}")]
    Protocol(String),
}

impl OracleError {
    /// Errors caused by the request itself rather than the backend.
    pub fn is_client_error(&self) -> bool {
        matches!(
            self,
            OracleError::InvalidRequest(_)
                | OracleError::ContextTooLong(_)
                | OracleError::Unscripted(_)
        )
    }
}

/// Token ids plus char ranges relative to the encoded text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub ids: Vec<TokenId>,
    pub offsets: Vec<(usize, usize)>,
}

pub trait TokenSpace: Send + Sync {
    fn vocab_size(&self) -> usize;
    fn eos_id(&self) -> TokenId;
    fn encode(&self, text: &str) -> Result<Encoding, OracleError>;
    fn decode(&self, ids: &[TokenId]) -> Result<String, OracleError>;
}

/// One oracle evaluation.
///
/// With `eos_offsets` set this is a boundary probe over `continuation`;
/// otherwise it asks for next-token logprobs of `candidates` (the whole
/// vocabulary when `None`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub context: Vec<TokenId>,
    #[serde(default)]
    pub candidates: Option<Vec<TokenId>>,
    #[serde(default)]
    pub continuation: Option<Vec<TokenId>>,
    #[serde(default, rename = "eos_offsets")]
    pub eos_probe_offsets: Option<Vec<usize>>,
}

impl OracleRequest {
    pub fn next(context: Vec<TokenId>, candidates: Option<Vec<TokenId>>) -> Self {
        Self {
            context,
            candidates,
            ..Self::default()
        }
    }

    pub fn boundary(
        context: Vec<TokenId>,
        continuation: Vec<TokenId>,
        offsets: Vec<usize>,
    ) -> Self {
        Self {
            context,
            continuation: Some(continuation),
            eos_probe_offsets: Some(offsets),
            ..Self::default()
        }
    }

    pub fn is_boundary_probe(&self) -> bool {
        self.eos_probe_offsets.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleResponse {
    pub logprobs: BTreeMap<TokenId, f64>,
    pub eos_logprobs: Vec<f64>,
}

/// Checks shared by every oracle implementation.
pub fn validate_next(
    context: &[TokenId],
    candidates: Option<&[TokenId]>,
    vocab_size: usize,
) -> Result<(), OracleError> {
    if context.is_empty() {
        return Err(OracleError::InvalidRequest("empty context".into()));
    }
    if let Some(c) = candidates {
        if c.is_empty() {
            return Err(OracleError::InvalidRequest("empty candidate list".into()));
        }
        if let Some(bad) = c.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(OracleError::InvalidRequest(format!(
                "candidate {bad} outside vocabulary of {vocab_size}"
            )));
        }
    }
    Ok(())
}

pub fn validate_boundary(
    context: &[TokenId],
    continuation: &[TokenId],
    offsets: &[usize],
) -> Result<(), OracleError> {
    if context.is_empty() {
        return Err(OracleError::InvalidRequest("empty context".into()));
    }
    if offsets.is_empty() {
        return Err(OracleError::InvalidRequest("no eos probe offsets".into()));
    }
    if offsets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OracleError::InvalidRequest(
            "eos probe offsets must be strictly increasing".into(),
        ));
    }
    if offsets[offsets.len() - 1] > continuation.len() {
        return Err(OracleError::InvalidRequest(format!(
            "eos probe offset {} beyond continuation of {} tokens",
            offsets[offsets.len() - 1],
            continuation.len()
        )));
    }
    Ok(())
}

pub trait Oracle: Send + Sync {
    fn token_space(&self) -> &dyn TokenSpace;

    /// Log-probabilities of `candidates` (or the full vocabulary) as the
    /// token following `context`.
    fn next_logprobs(
        &self,
        context: &[TokenId],
        candidates: Option<&[TokenId]>,
    ) -> Result<BTreeMap<TokenId, f64>, OracleError>;

    /// `log p([eos] | context ⊕ continuation[..o])` for each offset `o`, in
    /// one evaluation.
    fn boundary_eos_logprobs(
        &self,
        context: &[TokenId],
        continuation: &[TokenId],
        offsets: &[usize],
    ) -> Result<Vec<f64>, OracleError>;

    fn handle(&self, req: &OracleRequest) -> Result<OracleResponse, OracleError> {
        match (&req.continuation, &req.eos_probe_offsets) {
            (cont, Some(offsets)) => {
                let cont = cont.as_deref().unwrap_or(&[]);
                Ok(OracleResponse {
                    logprobs: BTreeMap::new(),
                    eos_logprobs: self.boundary_eos_logprobs(&req.context, cont, offsets)?,
                })
            }
            (Some(_), None) => Err(OracleError::InvalidRequest(
                "continuation given without eos_offsets".into(),
            )),
            (None, None) => Ok(OracleResponse {
                logprobs: self.next_logprobs(&req.context, req.candidates.as_deref())?,
                eos_logprobs: Vec::new(),
            }),
        }
    }
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn token_space(&self) -> &dyn TokenSpace {
        (**self).token_space()
    }
    fn next_logprobs(
        &self,
        context: &[TokenId],
        candidates: Option<&[TokenId]>,
    ) -> Result<BTreeMap<TokenId, f64>, OracleError> {
        (**self).next_logprobs(context, candidates)
    }
    fn boundary_eos_logprobs(
        &self,
        context: &[TokenId],
        continuation: &[TokenId],
        offsets: &[usize],
    ) -> Result<Vec<f64>, OracleError> {
        (**self).boundary_eos_logprobs(context, continuation, offsets)
    }
}

impl<T: Oracle + ?Sized> Oracle for std::sync::Arc<T> {
    fn token_space(&self) -> &dyn TokenSpace {
        (**self).token_space()
    }
    fn next_logprobs(
        &self,
        context: &[TokenId],
        candidates: Option<&[TokenId]>,
    ) -> Result<BTreeMap<TokenId, f64>, OracleError> {
        (**self).next_logprobs(context, candidates)
    }
    fn boundary_eos_logprobs(
        &self,
        context: &[TokenId],
        continuation: &[TokenId],
        offsets: &[usize],
    ) -> Result<Vec<f64>, OracleError> {
        (**self).boundary_eos_logprobs(context, continuation, offsets)
    }
}

/// Hands out the oracle for one unit of work (an example, a document).
///
/// Mock oracles own a growing vocabulary, so batch runners take a fresh one
/// per example to keep results independent of processing order. A remote
/// oracle is simply shared.
pub trait OracleFactory: Send + Sync {
    fn oracle(&self) -> Result<std::sync::Arc<dyn Oracle>, OracleError>;
}

impl<F> OracleFactory for F
where
    F: Fn() -> Result<std::sync::Arc<dyn Oracle>, OracleError> + Send + Sync,
{
    fn oracle(&self) -> Result<std::sync::Arc<dyn Oracle>, OracleError> {
        self()
    }
}

/// Fresh relevance mock with its own token space on every call.
#[derive(Debug, Clone, Default)]
pub struct RelevanceFactory(pub RelevanceConfig);

impl OracleFactory for RelevanceFactory {
    fn oracle(&self) -> Result<std::sync::Arc<dyn Oracle>, OracleError> {
        let space = std::sync::Arc::new(mock::MockTokenSpace::new());
        Ok(std::sync::Arc::new(RelevanceOracle::new(
            space,
            self.0.clone(),
        )))
    }
}

/// Counts oracle evaluations passing through it.
pub struct OracleMeter<'a> {
    inner: &'a dyn Oracle,
    next_calls: AtomicUsize,
    boundary_calls: AtomicUsize,
}

impl<'a> OracleMeter<'a> {
    pub fn new(inner: &'a dyn Oracle) -> Self {
        Self {
            inner,
            next_calls: AtomicUsize::new(0),
            boundary_calls: AtomicUsize::new(0),
        }
    }

    pub fn next_calls(&self) -> usize {
        self.next_calls.load(Ordering::Relaxed)
    }

    pub fn boundary_calls(&self) -> usize {
        self.boundary_calls.load(Ordering::Relaxed)
    }

    pub fn total_calls(&self) -> usize {
        self.next_calls() + self.boundary_calls()
    }
}

impl Oracle for OracleMeter<'_> {
    fn token_space(&self) -> &dyn TokenSpace {
        self.inner.token_space()
    }

    fn next_logprobs(
        &self,
        context: &[TokenId],
        candidates: Option<&[TokenId]>,
    ) -> Result<BTreeMap<TokenId, f64>, OracleError> {
        self.next_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.next_logprobs(context, candidates)
    }

    fn boundary_eos_logprobs(
        &self,
        context: &[TokenId],
        continuation: &[TokenId],
        offsets: &[usize],
    ) -> Result<Vec<f64>, OracleError> {
        self.boundary_calls.fetch_add(1, Ordering::Relaxed);
        self.inner
            .boundary_eos_logprobs(context, continuation, offsets)
    }
}
