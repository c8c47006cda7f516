use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{qa_f1, EvalExample, GenerationInput, Generator};
use crate::baselines::{
    chunk_paragraphs, chunk_sliding_window, render_context, rerank, select_top_n,
    select_within_words, word_count, ChunkScorer, ContextBudget, DEFAULT_MAX_WORDS,
};
use crate::decoder::{extract_evidence, Diagnostics, ExtractConfig};
use crate::document::{build_prompt, segment_paragraphs, segment_sentences, SourceDocument};
use crate::oracle::OracleFactory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Cfic,
    ChunkSw,
    ChunkPara,
    FullArticle,
    /// Control: a random run of whole sentences.
    RandomSpan,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::Cfic,
        Pipeline::ChunkSw,
        Pipeline::ChunkPara,
        Pipeline::FullArticle,
        Pipeline::RandomSpan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Cfic => "cfic",
            Pipeline::ChunkSw => "chunk-sw",
            Pipeline::ChunkPara => "chunk-para",
            Pipeline::FullArticle => "full-article",
            Pipeline::RandomSpan => "random-span",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown pipeline `{s}` (expected one of cfic, chunk-sw, chunk-para, full-article, random-span)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub pipeline: Pipeline,
    pub extract: ExtractConfig,
    /// Sliding-window chunk size in words.
    pub max_words: usize,
    pub budget: ContextBudget,
    /// Sentence count range of the random-span control, inclusive.
    pub random_span_min: usize,
    pub random_span_max: usize,
    pub seed: u64,
    pub parallelism: usize,
    /// Answer length limit passed to remote generators.
    pub max_answer_tokens: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::Cfic,
            extract: ExtractConfig::default(),
            max_words: DEFAULT_MAX_WORDS,
            budget: ContextBudget::default(),
            random_span_min: 1,
            random_span_max: 6,
            seed: 0,
            parallelism: 1,
            max_answer_tokens: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub dataset: String,
    pub prediction: Option<String>,
    pub f1: Option<f64>,
    pub context_words: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    /// Mean over scored examples; `None` when nothing was scored.
    pub mean_f1: Option<f64>,
    pub examples: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pipeline: Pipeline,
    pub config: EvalConfig,
    pub datasets: BTreeMap<String, DatasetSummary>,
    pub mean_f1: Option<f64>,
    pub failures: usize,
    /// Sorted by example id.
    pub records: Vec<ExampleRecord>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

impl MetricReport {
    pub fn from_records(config: EvalConfig, mut records: Vec<ExampleRecord>) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let mut datasets = BTreeMap::new();
        let mut by_tag: BTreeMap<&str, Vec<&ExampleRecord>> = BTreeMap::new();
        for r in &records {
            by_tag.entry(&r.dataset).or_default().push(r);
        }
        for (tag, rs) in by_tag {
            let scores: Vec<f64> = rs.iter().filter_map(|r| r.f1).collect();
            datasets.insert(
                tag.to_owned(),
                DatasetSummary {
                    mean_f1: mean(&scores),
                    examples: rs.len(),
                    failures: rs.len() - scores.len(),
                },
            );
        }
        let all: Vec<f64> = records.iter().filter_map(|r| r.f1).collect();
        Self {
            pipeline: config.pipeline,
            failures: records.len() - all.len(),
            mean_f1: mean(&all),
            config,
            datasets,
            records,
        }
    }
}

/// Column order of the reference results table; other tags follow
/// alphabetically.
const TABLE_COLUMNS: [(&str, &[&str]); 5] = [
    ("NarrativeQA", &["narrativeqa"]),
    ("Qasper", &["qasper"]),
    ("MultiFieldQA", &["multifieldqa_en", "multifieldqa"]),
    ("HotpotQA", &["hotpotqa"]),
    ("MuSiQue", &["musique"]),
];

/// Plain-text table, one row per report, F1 as percentages.
pub fn render_table(reports: &[MetricReport]) -> String {
    let mut cols: Vec<(String, Vec<String>)> = Vec::new();
    let mut known = Vec::new();
    for (name, tags) in TABLE_COLUMNS {
        let present: Vec<String> = tags
            .iter()
            .filter(|t| reports.iter().any(|r| r.datasets.contains_key(**t)))
            .map(|t| t.to_string())
            .collect();
        known.extend(tags.iter().map(|t| t.to_string()));
        if !present.is_empty() {
            cols.push((name.to_owned(), present));
        }
    }
    let mut extra: Vec<String> = reports
        .iter()
        .flat_map(|r| r.datasets.keys().cloned())
        .filter(|t| !known.contains(t))
        .collect();
    extra.sort();
    extra.dedup();
    cols.extend(extra.into_iter().map(|t| (t.clone(), vec![t])));

    let cell = |v: Option<f64>| v.map_or("-".to_owned(), |x| format!("{:.1}", x * 100.0));
    let mut out = String::new();
    let _ = write!(out, "{:<14}", "Pipeline");
    for (name, _) in &cols {
        let _ = write!(out, " {name:>12}");
    }
    let _ = writeln!(out, " {:>8}", "Avg");
    for r in reports {
        let _ = write!(out, "{:<14}", r.pipeline.name());
        for (_, tags) in &cols {
            let v = tags
                .iter()
                .find_map(|t| r.datasets.get(t))
                .and_then(|d| d.mean_f1);
            let _ = write!(out, " {:>12}", cell(v));
        }
        let _ = writeln!(out, " {:>8}", cell(r.mean_f1));
    }
    out
}

struct Refined {
    context: String,
    diagnostics: Option<Diagnostics>,
}

fn refine(
    ex: &EvalExample,
    index: usize,
    cfg: &EvalConfig,
    oracles: &dyn OracleFactory,
    scorer: &dyn ChunkScorer,
) -> Result<Refined, String> {
    let doc = SourceDocument::new(&ex.id, ex.article.as_str());
    let cfic = || -> Result<Refined, String> {
        let oracle = oracles.oracle().map_err(|e| format!("oracle: {e}"))?;
        let r = extract_evidence(&ex.query, &doc, oracle.as_ref(), &cfg.extract)
            .map_err(|e| format!("{} stage: {e}", e.stage()))?;
        Ok(Refined {
            context: r.evidence_text(),
            diagnostics: Some(r.diagnostics),
        })
    };
    match cfg.pipeline {
        Pipeline::Cfic => cfic(),
        Pipeline::FullArticle => Ok(Refined {
            context: ex.article.clone(),
            diagnostics: None,
        }),
        Pipeline::ChunkSw | Pipeline::ChunkPara => {
            let map = segment_sentences(&doc).map_err(|e| format!("segment stage: {e}"))?;
            let chunks = if cfg.pipeline == Pipeline::ChunkSw {
                chunk_sliding_window(&doc, &map, cfg.max_words)
            } else {
                chunk_paragraphs(&doc, &map, &segment_paragraphs(&doc))
            };
            let ranked =
                rerank(&ex.query, chunks, scorer).map_err(|e| format!("rerank stage: {e}"))?;
            let picked = match cfg.budget {
                ContextBudget::TopN(n) => select_top_n(&ranked, n),
                ContextBudget::Words(w) => select_within_words(&ranked, w),
                ContextBudget::MatchCfic => {
                    select_within_words(&ranked, word_count(&cfic()?.context))
                }
            };
            Ok(Refined {
                context: render_context(&picked),
                diagnostics: None,
            })
        }
        Pipeline::RandomSpan => {
            let map = segment_sentences(&doc).map_err(|e| format!("segment stage: {e}"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(index as u64));
            let lo = cfg.random_span_min.max(1).min(map.len());
            let hi = cfg.random_span_max.max(lo).min(map.len());
            let len = rng.gen_range(lo..=hi);
            let start = rng.gen_range(0..=map.len() - len);
            let a = map.sentences[start].char_start;
            let b = map.sentences[start + len - 1].char_end;
            Ok(Refined {
                context: doc.slice_chars(a..b).to_owned(),
                diagnostics: None,
            })
        }
    }
}

fn run_one(
    ex: &EvalExample,
    index: usize,
    cfg: &EvalConfig,
    oracles: &dyn OracleFactory,
    scorer: &dyn ChunkScorer,
    generator: &dyn Generator,
) -> ExampleRecord {
    let mut record = ExampleRecord {
        id: ex.id.clone(),
        dataset: ex.dataset_tag.clone(),
        prediction: None,
        f1: None,
        context_words: 0,
        diagnostics: None,
        error: None,
    };
    let outcome = refine(ex, index, cfg, oracles, scorer).and_then(|refined| {
        record.context_words = word_count(&refined.context);
        record.diagnostics = refined.diagnostics;
        let prompt =
            build_prompt(&ex.query, &refined.context).map_err(|e| format!("prompt stage: {e}"))?;
        generator
            .generate(GenerationInput {
                prompt: prompt.text(),
                query: &ex.query,
                evidence: &refined.context,
            })
            .map_err(|e| format!("generate stage: {e}"))
    });
    match outcome {
        Ok(prediction) => {
            record.f1 = Some(qa_f1(&prediction, &ex.gold_answers));
            record.prediction = Some(prediction);
        }
        Err(e) => {
            tracing::warn!(id = %ex.id, error = %e, "example failed");
            record.error = Some(e);
        }
    }
    record
}

/// Refines, answers and scores every example; failures are recorded and
/// excluded from the means.
pub fn run_eval(
    examples: &[EvalExample],
    cfg: &EvalConfig,
    oracles: &dyn OracleFactory,
    scorer: &dyn ChunkScorer,
    generator: &dyn Generator,
) -> MetricReport {
    let work = |(i, ex): (usize, &EvalExample)| run_one(ex, i, cfg, oracles, scorer, generator);
    let records: Vec<ExampleRecord> = if cfg.parallelism <= 1 {
        examples.iter().enumerate().map(work).collect()
    } else {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
        {
            Ok(pool) => pool.install(|| examples.par_iter().enumerate().map(work).collect()),
            Err(e) => {
                tracing::warn!(error = %e, "thread pool unavailable, running serially");
                examples.iter().enumerate().map(work).collect()
            }
        }
    };
    MetricReport::from_records(cfg.clone(), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::LexicalScorer;
    use crate::eval::EchoGenerator;
    use crate::oracle::RelevanceFactory;

    fn ex(id: &str, tag: &str, article: &str, gold: &str) -> EvalExample {
        EvalExample {
            id: id.into(),
            query: "Which river crossing?".into(),
            article: article.into(),
            gold_answers: vec![gold.into()],
            dataset_tag: tag.into(),
        }
    }

    #[test]
    fn empty_run_has_null_means() {
        let r = run_eval(
            &[],
            &EvalConfig::default(),
            &RelevanceFactory::default(),
            &LexicalScorer,
            &EchoGenerator,
        );
        assert!(r.records.is_empty());
        assert_eq!(r.mean_f1, None);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["mean_f1"].is_null());
    }

    #[test]
    fn full_article_context_is_the_article() {
        let exs = [
            ex(
                "b",
                "qasper",
                "The river crossing was hard. Nobody slept.",
                "river crossing",
            ),
            ex(
                "a",
                "hotpotqa",
                "Boats were few. The river crossing took days.",
                "boats",
            ),
        ];
        let cfg = EvalConfig {
            pipeline: Pipeline::FullArticle,
            ..Default::default()
        };
        let r = run_eval(
            &exs,
            &cfg,
            &RelevanceFactory::default(),
            &LexicalScorer,
            &EchoGenerator,
        );
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.records[0].id, "a");
        for rec in &r.records {
            let src = exs.iter().find(|e| e.id == rec.id).unwrap();
            assert_eq!(rec.prediction.as_deref(), Some(src.article.as_str()));
        }
        let recomputed = r.records.iter().filter_map(|x| x.f1).sum::<f64>() / 2.0;
        assert_eq!(r.mean_f1, Some(recomputed));
        let table = render_table(&[r]);
        assert!(table.find("Qasper").unwrap() < table.find("HotpotQA").unwrap());
    }

    #[test]
    fn failures_are_counted_not_averaged() {
        let exs = [
            ex("a", "t", "Fine article here.", "fine"),
            ex("b", "t", "Another one.", "x"),
        ];
        let cfg = EvalConfig {
            pipeline: Pipeline::Cfic,
            ..Default::default()
        };
        let failing =
            || -> Result<std::sync::Arc<dyn crate::oracle::Oracle>, crate::oracle::OracleError> {
                Err(crate::oracle::OracleError::Transport("down".into()))
            };
        let r = run_eval(&exs, &cfg, &failing, &LexicalScorer, &EchoGenerator);
        assert_eq!(r.failures, 2);
        assert_eq!(r.mean_f1, None);
        assert_eq!(r.datasets["t"].failures, 2);
    }

    #[test]
    fn pipeline_names_round_trip() {
        for p in Pipeline::ALL {
            assert_eq!(p.name().parse::<Pipeline>().unwrap(), p);
            assert_eq!(
                serde_json::to_string(&p).unwrap(),
                format!("\"{}\"", p.name())
            );
        }
    }
}
