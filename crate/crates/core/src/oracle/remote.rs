//! Blocking HTTP client for a remote oracle server.
//!
//! Do not call from inside an async runtime; wrap in `spawn_blocking`.

use std::collections::BTreeMap;
use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{
    DecodeReply, DecodeRequest, EncodeReply, EncodeRequest, ErrorBody, LogprobsReply, TokenizerInfo,
};
use super::{
    validate_boundary, Encoding, Oracle, OracleError, OracleRequest, OracleResponse, TokenId,
    TokenSpace,
};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Extra attempts after a transport failure or 5xx reply.
    pub retries: u32,
    pub backoff: Duration,
    pub api_key: Option<String>,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            timeout: Duration::from_secs(60),
            retries: 2,
            backoff: Duration::from_millis(200),
            api_key: None,
        }
    }
}

/// Shared HTTP plumbing: JSON in, JSON out, retry on transient failures.
#[derive(Debug, Clone)]
pub struct HttpJson {
    cfg: RemoteConfig,
    client: Client,
}

impl HttpJson {
    pub fn new(cfg: RemoteConfig) -> Result<Self, OracleError> {
        let client = Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        Ok(Self { cfg, client })
    }

    pub fn base_url(&self) -> &str {
        &self.cfg.base_url
    }

    pub fn get<R: DeserializeOwned>(&self, path: &str) -> Result<R, OracleError> {
        self.send(path, None::<&()>)
    }

    pub fn post<B: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<R, OracleError> {
        self.send(path, Some(body))
    }

    fn send<B: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        body: Option<&B>,
    ) -> Result<R, OracleError> {
        let url = format!("{}{}", self.cfg.base_url, path);
        let mut attempt = 0;
        loop {
            let result = self.send_once(&url, body);
            match result {
                Err(ref e) if attempt < self.cfg.retries && retryable(e) => {
                    attempt += 1;
                    tracing::warn!(%url, attempt, error = %e, "retrying oracle request");
                    thread::sleep(self.cfg.backoff * 2u32.pow(attempt - 1));
                }
                other => return other,
            }
        }
    }

    fn send_once<B: Serialize, R: DeserializeOwned>(
        &self,
        url: &str,
        body: Option<&B>,
    ) -> Result<R, OracleError> {
        let mut req = match body {
            Some(b) => self.client.post(url).json(b),
            None => self.client.get(url),
        };
        if let Some(key) = &self.cfg.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let message = resp
                .json::<ErrorBody>()
                .map(|b| b.error)
                .unwrap_or_else(|_| status.canonical_reason().unwrap_or("").to_owned());
            return Err(match status {
                StatusCode::PAYLOAD_TOO_LARGE => OracleError::ContextTooLong(message),
                StatusCode::BAD_REQUEST | StatusCode::UNPROCESSABLE_ENTITY => {
                    OracleError::InvalidRequest(message)
                }
                _ => OracleError::Server {
                    status: status.as_u16(),
                    message,
                },
            });
        }
        resp.json::<R>()
            .map_err(|e| OracleError::Protocol(e.to_string()))
    }
}

fn retryable(e: &OracleError) -> bool {
    match e {
        OracleError::Transport(_) => true,
        OracleError::Server { status, .. } => *status >= 500,
        _ => false,
    }
}

/// Tokenizer living on the oracle server.
///
/// `vocab_size` and `eos_id` are read once at connect time.
#[derive(Debug, Clone)]
pub struct RemoteTokenSpace {
    http: HttpJson,
    info: TokenizerInfo,
}

impl RemoteTokenSpace {
    pub fn connect(http: HttpJson) -> Result<Self, OracleError> {
        let info: TokenizerInfo = http.get("/v1/tokenizer")?;
        if info.eos_id as usize >= info.vocab_size {
            return Err(OracleError::Protocol(format!(
                "eos id {} outside vocabulary of {}",
                info.eos_id, info.vocab_size
            )));
        }
        Ok(Self { http, info })
    }
}

impl TokenSpace for RemoteTokenSpace {
    fn vocab_size(&self) -> usize {
        self.info.vocab_size
    }

    fn eos_id(&self) -> TokenId {
        self.info.eos_id
    }

    fn encode(&self, text: &str) -> Result<Encoding, OracleError> {
        let reply: EncodeReply = self.http.post(
            "/v1/encode",
            &EncodeRequest {
                text: text.to_owned(),
            },
        )?;
        if reply.ids.len() != reply.offsets.len() {
            return Err(OracleError::Protocol(
                "encode ids/offsets length mismatch".into(),
            ));
        }
        Ok(Encoding {
            ids: reply.ids,
            offsets: reply.offsets,
        })
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String, OracleError> {
        let reply: DecodeReply = self
            .http
            .post("/v1/decode", &DecodeRequest { ids: ids.to_vec() })?;
        Ok(reply.text)
    }
}

pub struct RemoteOracle {
    http: HttpJson,
    space: RemoteTokenSpace,
}

impl RemoteOracle {
    pub fn connect(cfg: RemoteConfig) -> Result<Self, OracleError> {
        let http = HttpJson::new(cfg)?;
        let space = RemoteTokenSpace::connect(http.clone())?;
        Ok(Self { http, space })
    }

    fn call(&self, req: &OracleRequest) -> Result<OracleResponse, OracleError> {
        let reply: LogprobsReply = self.http.post("/v1/logprobs", req)?;
        Ok(reply.into())
    }
}

impl Oracle for RemoteOracle {
    fn token_space(&self) -> &dyn TokenSpace {
        &self.space
    }

    fn next_logprobs(
        &self,
        context: &[TokenId],
        candidates: Option<&[TokenId]>,
    ) -> Result<BTreeMap<TokenId, f64>, OracleError> {
        if context.is_empty() {
            return Err(OracleError::InvalidRequest("empty context".into()));
        }
        let resp = self.call(&OracleRequest::next(
            context.to_vec(),
            candidates.map(<[_]>::to_vec),
        ))?;
        if let Some(c) = candidates {
            if let Some(missing) = c.iter().find(|t| !resp.logprobs.contains_key(t)) {
                return Err(OracleError::Protocol(format!(
                    "no logprob for candidate {missing}"
                )));
            }
        }
        Ok(resp.logprobs)
    }

    fn boundary_eos_logprobs(
        &self,
        context: &[TokenId],
        continuation: &[TokenId],
        offsets: &[usize],
    ) -> Result<Vec<f64>, OracleError> {
        validate_boundary(context, continuation, offsets)?;
        let resp = self.call(&OracleRequest::boundary(
            context.to_vec(),
            continuation.to_vec(),
            offsets.to_vec(),
        ))?;
        if resp.eos_logprobs.len() != offsets.len() {
            return Err(OracleError::Protocol(format!(
                "expected {} eos logprobs, got {}",
                offsets.len(),
                resp.eos_logprobs.len()
            )));
        }
        Ok(resp.eos_logprobs)
    }
}
