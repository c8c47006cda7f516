//! JSON bodies of the remote oracle protocol.
//!
//! `POST /v1/logprobs` takes an [`OracleRequest`](super::OracleRequest) and
//! answers with [`LogprobsReply`]. Log-probabilities of `-inf` travel as
//! `null`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{OracleResponse, TokenId};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LogprobsReply {
    #[serde(default)]
    pub logprobs: BTreeMap<TokenId, Option<f64>>,
    #[serde(default)]
    pub eos_logprobs: Vec<Option<f64>>,
}

fn to_wire(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn from_wire(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NEG_INFINITY)
}

impl From<&OracleResponse> for LogprobsReply {
    fn from(r: &OracleResponse) -> Self {
        Self {
            logprobs: r.logprobs.iter().map(|(&t, &v)| (t, to_wire(v))).collect(),
            eos_logprobs: r.eos_logprobs.iter().map(|&v| to_wire(v)).collect(),
        }
    }
}

impl From<LogprobsReply> for OracleResponse {
    fn from(r: LogprobsReply) -> Self {
        Self {
            logprobs: r
                .logprobs
                .into_iter()
                .map(|(t, v)| (t, from_wire(v)))
                .collect(),
            eos_logprobs: r.eos_logprobs.into_iter().map(from_wire).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerInfo {
    pub vocab_size: usize,
    pub eos_id: TokenId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeReply {
    pub ids: Vec<TokenId>,
    pub offsets: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeRequest {
    pub ids: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeReply {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedReply {
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompt: String,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateReply {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_shape_and_infinities() {
        let resp = OracleResponse {
            logprobs: [(7, -0.5), (9, f64::NEG_INFINITY)].into_iter().collect(),
            eos_logprobs: vec![-1.0, f64::NEG_INFINITY],
        };
        let json = serde_json::to_value(LogprobsReply::from(&resp)).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"logprobs": {"7": -0.5, "9": null}, "eos_logprobs": [-1.0, null]})
        );
        let back: LogprobsReply = serde_json::from_value(json).unwrap();
        assert_eq!(OracleResponse::from(back), resp);
    }
}
