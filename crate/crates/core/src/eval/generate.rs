use crate::oracle::remote::HttpJson;
use crate::oracle::wire::{GenerateReply, GenerateRequest};
use crate::oracle::OracleError;

/// What a generator sees for one example.
#[derive(Debug, Clone, Copy)]
pub struct GenerationInput<'a> {
    /// The rendered QA prompt.
    pub prompt: &'a str,
    pub query: &'a str,
    /// The refined context substituted into the prompt.
    pub evidence: &'a str,
}

pub trait Generator: Send + Sync {
    fn generate(&self, input: GenerationInput<'_>) -> Result<String, OracleError>;
}

/// Answers with the evidence itself. Scores the context, not a model.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoGenerator;

impl Generator for EchoGenerator {
    fn generate(&self, input: GenerationInput<'_>) -> Result<String, OracleError> {
        Ok(input.evidence.to_owned())
    }
}

/// Text generation over HTTP (`POST /v1/generate`).
pub struct RemoteGenerator {
    http: HttpJson,
    max_tokens: usize,
}

impl RemoteGenerator {
    pub fn new(http: HttpJson, max_tokens: usize) -> Self {
        Self { http, max_tokens }
    }

    pub fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        let reply: GenerateReply = self.http.post(
            "/v1/generate",
            &GenerateRequest {
                prompt: prompt.to_owned(),
                max_tokens: self.max_tokens,
            },
        )?;
        Ok(reply.text)
    }
}

impl Generator for RemoteGenerator {
    fn generate(&self, input: GenerationInput<'_>) -> Result<String, OracleError> {
        self.complete(input.prompt)
    }
}
