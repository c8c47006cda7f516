//! HTTP front end for a mock oracle, speaking the same JSON protocol the
//! core remote clients use.

use std::collections::BTreeSet;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use axum::extract::{Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use cfic_core::document::{segment_sentences, SourceDocument, PROMPT_TEMPLATE};
use cfic_core::oracle::wire::{
    DecodeReply, DecodeRequest, EmbedReply, EmbedRequest, EncodeReply, EncodeRequest, ErrorBody,
    GenerateReply, GenerateRequest, LogprobsReply, TokenizerInfo,
};
use cfic_core::oracle::{Oracle, OracleError, OracleRequest};
use cfic_core::text;

pub const EMBED_DIM: usize = 256;

#[derive(Clone)]
pub struct AppState {
    pub oracle: Arc<dyn Oracle>,
    /// Bearer token required on every request when set.
    pub api_key: Option<String>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/logprobs", post(logprobs))
        .route("/v1/tokenizer", get(tokenizer))
        .route("/v1/encode", post(encode))
        .route("/v1/decode", post(decode))
        .route("/v1/embed", post(embed))
        .route("/v1/generate", post(generate))
        .route("/healthz", get(|| async { "ok" }))
        .route_layer(middleware::from_fn_with_state(state.clone(), auth))
        .with_state(state)
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

impl From<OracleError> for ApiError {
    fn from(e: OracleError) -> Self {
        let status = match e {
            OracleError::ContextTooLong(_) => StatusCode::PAYLOAD_TOO_LARGE,
            OracleError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            OracleError::Unscripted(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

async fn auth(
    State(state): State<AppState>,
    req: Request,
    next: Next,
) -> Result<Response, ApiError> {
    if let Some(key) = &state.api_key {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(key.as_str()) {
            return Err(ApiError(
                StatusCode::UNAUTHORIZED,
                "missing or wrong api key".into(),
            ));
        }
    }
    Ok(next.run(req).await)
}

/// Runs oracle work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, OracleError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

async fn logprobs(
    State(s): State<AppState>,
    Json(req): Json<OracleRequest>,
) -> Result<Json<LogprobsReply>, ApiError> {
    let resp = blocking(move || s.oracle.handle(&req)).await?;
    Ok(Json(LogprobsReply::from(&resp)))
}

async fn tokenizer(State(s): State<AppState>) -> Json<TokenizerInfo> {
    let space = s.oracle.token_space();
    Json(TokenizerInfo {
        vocab_size: space.vocab_size(),
        eos_id: space.eos_id(),
    })
}

async fn encode(
    State(s): State<AppState>,
    Json(req): Json<EncodeRequest>,
) -> Result<Json<EncodeReply>, ApiError> {
    let enc = blocking(move || s.oracle.token_space().encode(&req.text)).await?;
    Ok(Json(EncodeReply {
        ids: enc.ids,
        offsets: enc.offsets,
    }))
}

async fn decode(
    State(s): State<AppState>,
    Json(req): Json<DecodeRequest>,
) -> Result<Json<DecodeReply>, ApiError> {
    let text = blocking(move || s.oracle.token_space().decode(&req.ids)).await?;
    Ok(Json(DecodeReply { text }))
}

async fn embed(Json(req): Json<EmbedRequest>) -> Json<EmbedReply> {
    Json(EmbedReply {
        vectors: req.texts.iter().map(|t| hashed_embedding(t)).collect(),
    })
}

async fn generate(Json(req): Json<GenerateRequest>) -> Json<GenerateReply> {
    Json(GenerateReply {
        text: mock_answer(&req.prompt, req.max_tokens),
    })
}

/// L2-normalised bag of hashed content words.
pub fn hashed_embedding(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; EMBED_DIM];
    for w in text::content_words(text) {
        let mut h = DefaultHasher::new();
        w.hash(&mut h);
        v[(h.finish() % EMBED_DIM as u64) as usize] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Splits an extraction-style prompt into (article, question).
fn parse_prompt(prompt: &str) -> Option<(&str, &str)> {
    let (head, rest) = PROMPT_TEMPLATE.split_once("{Article}")?;
    let (middle, _) = rest.split_once("{Question}")?;
    let body = prompt.strip_prefix(head)?;
    let (article, question) = body.split_once(middle)?;
    Some((article, question.trim_end()))
}

/// Answers with the article sentence sharing the most content words with the
/// question (earliest on ties), cut to `max_tokens` words. Prompts of any
/// other shape get a question about their first content word.
pub fn mock_answer(prompt: &str, max_tokens: usize) -> String {
    let Some((article, question)) = parse_prompt(prompt) else {
        let topic = text::content_words(prompt.rsplit("Passage:").next().unwrap_or(prompt))
            .next()
            .unwrap_or_else(|| "this".into());
        return format!("What does the passage say about {topic}?");
    };
    let doc = SourceDocument::new("prompt", article);
    let Ok(map) = segment_sentences(&doc) else {
        return String::new();
    };
    let wanted: BTreeSet<String> = text::content_words(question).collect();
    let best = (0..map.len())
        .map(|i| map.text(&doc, i))
        .enumerate()
        .max_by_key(|(i, s)| {
            let hits = text::content_words(s)
                .filter(|w| wanted.contains(w))
                .count();
            (hits, std::cmp::Reverse(*i))
        })
        .map(|(_, s)| s)
        .unwrap_or("");
    best.split_whitespace()
        .take(max_tokens)
        .collect::<Vec<_>>()
        .join(" ")
}
