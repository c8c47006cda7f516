use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cfic_core::baselines::{ContextBudget, DEFAULT_MAX_WORDS};
use cfic_core::decoder::{DecodeConfig, DecodeMode, ExtractConfig};
use cfic_core::eval::{EvalConfig, Pipeline, SpanSamplerConfig};

use crate::error::CliError;

pub const ORACLE_URL_ENV: &str = "CFIC_ORACLE_URL";
pub const API_KEY_ENV: &str = "CFIC_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Deterministic,
    Stochastic,
}

/// Decoder section of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeSection {
    pub k: usize,
    pub d: usize,
    pub max_beta: usize,
    pub mode: ModeName,
    pub max_candidates_expanded: usize,
    pub trie_depth: usize,
    pub max_context_tokens: Option<usize>,
}

impl Default for DecodeSection {
    fn default() -> Self {
        let d = DecodeConfig::default();
        Self {
            k: d.k,
            d: d.d,
            max_beta: d.max_beta,
            mode: ModeName::Deterministic,
            max_candidates_expanded: d.max_candidates_expanded,
            trie_depth: d.trie_depth,
            max_context_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub max_words: usize,
    /// `match-cfic`, `words:N` or `top:N`.
    pub budget: String,
    /// `lexical` or an embedding endpoint URL.
    pub scorer: String,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            max_words: DEFAULT_MAX_WORDS,
            budget: "match-cfic".into(),
            scorer: "lexical".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SftSection {
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub spans_per_doc: usize,
    /// `cloze` or a generation endpoint URL.
    pub query_generator: String,
}

impl Default for SftSection {
    fn default() -> Self {
        let s = SpanSamplerConfig::default();
        Self {
            min_sentences: s.min_sentences,
            max_sentences: s.max_sentences,
            spans_per_doc: s.spans_per_doc,
            query_generator: "cloze".into(),
        }
    }
}

/// Everything a run needs, after merging defaults, the config file, the
/// environment and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `mock:relevance`, `mock:scripted` or an oracle server URL.
    pub oracle: String,
    /// Script for `mock:scripted`.
    pub script: Option<PathBuf>,
    pub seed: u64,
    pub parallelism: usize,
    pub pipeline: Pipeline,
    /// `echo` or a generation endpoint URL.
    pub generator: String,
    pub max_answer_tokens: usize,
    pub decode: DecodeSection,
    pub baseline: BaselineSection,
    pub sft: SftSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            oracle: "mock:relevance".into(),
            script: None,
            seed: 0,
            parallelism: 1,
            pipeline: Pipeline::Cfic,
            generator: "echo".into(),
            max_answer_tokens: 64,
            decode: DecodeSection::default(),
            baseline: BaselineSection::default(),
            sft: SftSection::default(),
        }
    }
}

/// Flag values that override the file; `None` means not given.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// mock:relevance | mock:scripted | http(s)://oracle-server
    #[arg(long, global = true)]
    pub oracle: Option<String>,
    /// Script file for mock:scripted.
    #[arg(long, global = true)]
    pub script: Option<PathBuf>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub max_beta: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeName>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_context_tokens: Option<usize>,
    /// cfic | chunk-sw | chunk-para | full-article | random-span
    #[arg(long, global = true)]
    pub pipeline: Option<Pipeline>,
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// echo | http(s)://generation-server
    #[arg(long, global = true)]
    pub generator: Option<String>,
    /// lexical | http(s)://embedding-server
    #[arg(long, global = true)]
    pub scorer: Option<String>,
    /// match-cfic | words:N | top:N
    #[arg(long, global = true)]
    pub budget: Option<String>,
    #[arg(long, global = true)]
    pub max_words: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// defaults < file < environment (oracle endpoint only) < flags.
    pub fn resolve(flags: &Overrides, env_oracle: Option<String>) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(url) = env_oracle.filter(|s| !s.is_empty()) {
            cfg.oracle = url;
        }
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = flags.$flag.clone() {
                    cfg.$($field).+ = v;
                }
            };
        }
        set!(oracle => oracle);
        set!(k => decode.k);
        set!(d => decode.d);
        set!(max_beta => decode.max_beta);
        set!(mode => decode.mode);
        set!(seed => seed);
        set!(pipeline => pipeline);
        set!(parallelism => parallelism);
        set!(generator => generator);
        set!(scorer => baseline.scorer);
        set!(budget => baseline.budget);
        set!(max_words => baseline.max_words);
        if flags.script.is_some() {
            cfg.script = flags.script.clone();
        }
        if flags.max_context_tokens.is_some() {
            cfg.decode.max_context_tokens = flags.max_context_tokens;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.extract_config()
            .decode
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.budget()?;
        if self.parallelism == 0 {
            return Err(CliError::Config("parallelism must be >= 1".into()));
        }
        if self.sft.min_sentences == 0 || self.sft.min_sentences > self.sft.max_sentences {
            return Err(CliError::Config(
                "sft sentence range must satisfy 1 <= min <= max".into(),
            ));
        }
        match self.oracle.as_str() {
            "mock:relevance" => {}
            "mock:scripted" if self.script.is_none() => {
                return Err(CliError::Config("mock:scripted needs --script".into()))
            }
            "mock:scripted" => {}
            url if is_url(url) => {}
            other => return Err(CliError::Config(format!("unknown oracle `{other}`"))),
        }
        for (what, v, local) in [
            ("generator", &self.generator, "echo"),
            ("scorer", &self.baseline.scorer, "lexical"),
            ("query_generator", &self.sft.query_generator, "cloze"),
        ] {
            if v != local && !is_url(v) {
                return Err(CliError::Config(format!(
                    "{what} must be `{local}` or a URL, got `{v}`"
                )));
            }
        }
        Ok(())
    }

    pub fn decode_mode(&self) -> DecodeMode {
        match self.decode.mode {
            ModeName::Deterministic => DecodeMode::Deterministic,
            ModeName::Stochastic => DecodeMode::Stochastic { seed: self.seed },
        }
    }

    pub fn extract_config(&self) -> ExtractConfig {
        let d = &self.decode;
        ExtractConfig {
            decode: DecodeConfig {
                k: d.k,
                d: d.d,
                max_beta: d.max_beta,
                mode: self.decode_mode(),
                max_candidates_expanded: d.max_candidates_expanded,
                trie_depth: d.trie_depth,
            },
            max_context_tokens: d.max_context_tokens,
        }
    }

    pub fn budget(&self) -> Result<ContextBudget, CliError> {
        let b = self.baseline.budget.as_str();
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad budget `{b}`")))
        };
        match b.split_once(':') {
            None if b == "match-cfic" => Ok(ContextBudget::MatchCfic),
            Some(("words", n)) => Ok(ContextBudget::Words(num(n)?)),
            Some(("top", n)) => Ok(ContextBudget::TopN(num(n)?)),
            _ => Err(CliError::Config(format!(
                "bad budget `{b}` (expected match-cfic, words:N or top:N)"
            ))),
        }
    }

    pub fn eval_config(&self) -> Result<EvalConfig, CliError> {
        Ok(EvalConfig {
            pipeline: self.pipeline,
            extract: self.extract_config(),
            max_words: self.baseline.max_words,
            budget: self.budget()?,
            seed: self.seed,
            parallelism: self.parallelism,
            max_answer_tokens: self.max_answer_tokens,
            ..EvalConfig::default()
        })
    }

    pub fn span_sampler(&self) -> SpanSamplerConfig {
        SpanSamplerConfig {
            min_sentences: self.sft.min_sentences,
            max_sentences: self.sft.max_sentences,
            spans_per_doc: self.sft.spans_per_doc,
            seed: self.seed,
        }
    }
}

pub fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}
