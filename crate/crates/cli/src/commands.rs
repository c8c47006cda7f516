use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use cfic_core::baselines::{
    chunk_paragraphs, chunk_sliding_window, rerank, ChunkScorer, EmbeddingScorer, LexicalScorer,
};
use cfic_core::document::{segment_paragraphs, segment_sentences, DocumentRecord, SourceDocument};
use cfic_core::eval::{
    load_examples, render_table, run_eval, sft_make, ClozeQueryGenerator, EchoGenerator, Generator,
    QueryGenerator, RemoteGenerator, RemoteQueryGenerator,
};
use cfic_core::extract_evidence;
use cfic_core::oracle::mock::{MockTokenSpace, Script, ScriptedOracle};
use cfic_core::oracle::remote::{HttpJson, RemoteConfig, RemoteOracle};
use cfic_core::oracle::{Oracle, OracleError, OracleFactory, RelevanceFactory};

use crate::config::{RunConfig, API_KEY_ENV};
use crate::error::CliError;

fn remote_config(url: &str) -> RemoteConfig {
    let mut rc = RemoteConfig::new(url);
    rc.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
    rc
}

pub fn oracle_factory(cfg: &RunConfig) -> Result<Box<dyn OracleFactory>, CliError> {
    match cfg.oracle.as_str() {
        "mock:relevance" => Ok(Box::new(RelevanceFactory::default())),
        "mock:scripted" => {
            let path = cfg
                .script
                .as_ref()
                .ok_or_else(|| CliError::Config("mock:scripted needs --script".into()))?;
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let script: Script = serde_json::from_str(&text)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            Ok(Box::new(move || -> Result<Arc<dyn Oracle>, OracleError> {
                let space = Arc::new(MockTokenSpace::new());
                Ok(Arc::new(ScriptedOracle::from_script(space, script.clone())))
            }))
        }
        url => {
            let remote: Arc<dyn Oracle> = Arc::new(RemoteOracle::connect(remote_config(url))?);
            Ok(Box::new(move || -> Result<Arc<dyn Oracle>, OracleError> {
                Ok(remote.clone())
            }))
        }
    }
}

pub fn generator(cfg: &RunConfig) -> Result<Box<dyn Generator>, CliError> {
    if cfg.generator == "echo" {
        return Ok(Box::new(EchoGenerator));
    }
    let http = HttpJson::new(remote_config(&cfg.generator))?;
    Ok(Box::new(RemoteGenerator::new(http, cfg.max_answer_tokens)))
}

pub fn scorer(cfg: &RunConfig) -> Result<Box<dyn ChunkScorer>, CliError> {
    if cfg.baseline.scorer == "lexical" {
        return Ok(Box::new(LexicalScorer));
    }
    Ok(Box::new(EmbeddingScorer::new(HttpJson::new(
        remote_config(&cfg.baseline.scorer),
    )?)))
}

fn query_generator(cfg: &RunConfig) -> Result<Box<dyn QueryGenerator>, CliError> {
    if cfg.sft.query_generator == "cloze" {
        return Ok(Box::new(ClozeQueryGenerator));
    }
    let http = HttpJson::new(remote_config(&cfg.sft.query_generator))?;
    Ok(Box::new(RemoteQueryGenerator(RemoteGenerator::new(
        http,
        cfg.max_answer_tokens,
    ))))
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

/// Reads a plain text file as one document, or a `.jsonl` file of
/// `{"doc_id", "text"}` records.
pub fn read_documents(path: &Path, doc_id: Option<&str>) -> Result<Vec<SourceDocument>, CliError> {
    if !is_jsonl(path) {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let id = doc_id
            .map(str::to_owned)
            .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "doc".into());
        return Ok(vec![SourceDocument::new(id, text)]);
    }
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut docs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocumentRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        docs.push(rec.into());
    }
    Ok(docs)
}

pub struct Output(Box<dyn Write>, Option<PathBuf>);

impl Output {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Output(Box::new(io::stdout().lock()), None)),
            Some(p) => {
                let f = fs::File::create(p).map_err(|e| CliError::io(p, e))?;
                Ok(Output(Box::new(io::BufWriter::new(f)), Some(p.to_owned())))
            }
        }
    }

    fn err(&self, e: io::Error) -> CliError {
        match &self.1 {
            Some(p) => CliError::io(p, e),
            None => CliError::io(Path::new("<stdout>"), e),
        }
    }

    pub fn write_str(&mut self, s: &str) -> Result<(), CliError> {
        self.0.write_all(s.as_bytes()).map_err(|e| self.err(e))
    }

    pub fn pretty<T: Serialize>(&mut self, v: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Parse(e.to_string()))?;
        s.push('\n');
        self.write_str(&s)
    }

    pub fn line<T: Serialize>(&mut self, v: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string(v).map_err(|e| CliError::Parse(e.to_string()))?;
        s.push('\n');
        self.write_str(&s)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.0.flush().map_err(|e| self.err(e))
    }
}

pub fn extract(
    cfg: &RunConfig,
    query: &str,
    doc: &Path,
    doc_id: Option<&str>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let docs = read_documents(doc, doc_id)?;
    let oracles = oracle_factory(cfg)?;
    let ecfg = cfg.extract_config();
    let mut w = Output::open(out)?;
    if is_jsonl(doc) {
        for d in &docs {
            let result = extract_evidence(query, d, oracles.oracle()?.as_ref(), &ecfg)?;
            w.line(&result)?;
        }
    } else {
        let result = extract_evidence(query, &docs[0], oracles.oracle()?.as_ref(), &ecfg)?;
        w.pretty(&result)?;
    }
    w.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ChunkMethod {
    /// Greedy sentence-aligned sliding window.
    Sw,
    /// One chunk per paragraph.
    Para,
}

pub fn chunk(
    cfg: &RunConfig,
    doc: &Path,
    method: ChunkMethod,
    query: Option<&str>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let docs = read_documents(doc, None)?;
    let mut w = Output::open(out)?;
    let scorer = scorer(cfg)?;
    for d in &docs {
        let map =
            segment_sentences(d).map_err(|e| CliError::Parse(format!("{}: {e}", d.doc_id())))?;
        let chunks = match method {
            ChunkMethod::Sw => chunk_sliding_window(d, &map, cfg.baseline.max_words),
            ChunkMethod::Para => chunk_paragraphs(d, &map, &segment_paragraphs(d)),
        };
        match query {
            Some(q) => w.pretty(&rerank(q, chunks, scorer.as_ref())?)?,
            None => w.pretty(&chunks)?,
        }
    }
    w.finish()
}

pub fn eval(
    cfg: &RunConfig,
    data: &Path,
    lenient: bool,
    out: Option<&Path>,
    table: Option<&Path>,
) -> Result<(), CliError> {
    let loaded = load_examples(data, lenient)?;
    for (line, msg) in &loaded.skipped {
        tracing::warn!(line, error = %msg, "malformed record skipped");
    }
    let ecfg = cfg.eval_config()?;
    let oracles = oracle_factory(cfg)?;
    let scorer = scorer(cfg)?;
    let generator = generator(cfg)?;
    let report = run_eval(
        &loaded.examples,
        &ecfg,
        oracles.as_ref(),
        scorer.as_ref(),
        generator.as_ref(),
    );
    let mut w = Output::open(out)?;
    w.pretty(&report)?;
    w.finish()?;
    let rendered = render_table(std::slice::from_ref(&report));
    match table {
        Some(p) => fs::write(p, rendered).map_err(|e| CliError::io(p, e))?,
        None => eprint!("{rendered}"),
    }
    Ok(())
}

fn fmt_f1(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_d(
    cfg: &RunConfig,
    data: &Path,
    d_values: &[usize],
    lenient: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if d_values.len() < 2 {
        return Err(CliError::Config(
            "sweep-d needs at least two d values".into(),
        ));
    }
    let loaded = load_examples(data, lenient)?;
    let oracles = oracle_factory(cfg)?;
    let scorer = scorer(cfg)?;
    let generator = generator(cfg)?;
    let mut rows: Vec<[String; 4]> = Vec::new();
    for &d in d_values {
        let mut run = cfg.clone();
        run.decode.d = d;
        if let Err(e) = run.validate() {
            tracing::warn!(d, error = %e, "skipping d value");
            rows.push([d.to_string(), String::new(), String::new(), e.to_string()]);
            continue;
        }
        let report = run_eval(
            &loaded.examples,
            &run.eval_config()?,
            oracles.as_ref(),
            scorer.as_ref(),
            generator.as_ref(),
        );
        for (tag, s) in &report.datasets {
            rows.push([
                d.to_string(),
                tag.clone(),
                fmt_f1(s.mean_f1),
                s.failures.to_string(),
            ]);
        }
        rows.push([
            d.to_string(),
            "all".into(),
            fmt_f1(report.mean_f1),
            report.failures.to_string(),
        ]);
    }
    let mut buf = Vec::new();
    {
        let mut csv = csv::Writer::from_writer(&mut buf);
        let io_err = |e: csv::Error| CliError::Parse(e.to_string());
        csv.write_record(["d", "dataset", "mean_f1", "failures"])
            .map_err(io_err)?;
        for r in &rows {
            csv.write_record(r).map_err(io_err)?;
        }
        csv.flush().map_err(|e| CliError::Parse(e.to_string()))?;
    }
    let mut w = Output::open(out)?;
    w.write_str(&String::from_utf8_lossy(&buf))?;
    w.finish()
}

pub fn sft_make_cmd(cfg: &RunConfig, corpus: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let docs = read_documents(corpus, None)?;
    let triplets = sft_make(&docs, &cfg.span_sampler(), query_generator(cfg)?.as_ref());
    let mut w = Output::open(out)?;
    for t in &triplets {
        w.line(t)?;
    }
    w.finish()
}
