//! Seeded synthetic documents: random articles for property tests and
//! planted-evidence QA examples with known answers.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::EvalExample;

const FILLER_ONSETS: &[char] = &[
    'b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v',
];
const KEYWORD_ONSETS: &[char] = &['j', 'q', 'x', 'z'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];
const OPENERS: &[&str] = &[
    "The", "In", "A", "This", "Its", "Many", "Some", "After", "Each",
];
const GLUE: &[&str] = &[
    "the", "of", "and", "in", "to", "a", "with", "for", "on", "by",
];
const ABBREVIATED: &[&str] = &["Dr.", "Mr.", "Mrs.", "Prof.", "St."];

fn syllable(rng: &mut ChaCha8Rng, onsets: &[char]) -> String {
    let mut s = String::with_capacity(2);
    s.push(*onsets.choose(rng).unwrap());
    s.push(*VOWELS.choose(rng).unwrap());
    s
}

/// Lowercase pseudo-word of 2 or 3 syllables from filler consonants.
pub fn filler_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=3);
    (0..n).map(|_| syllable(rng, FILLER_ONSETS)).collect()
}

/// Pseudo-word that can never collide with a filler word: its first
/// consonant is outside the filler alphabet.
pub fn keyword(rng: &mut ChaCha8Rng) -> String {
    let mut w = syllable(rng, KEYWORD_ONSETS);
    w.push_str(&syllable(rng, FILLER_ONSETS));
    w.push_str(&syllable(rng, FILLER_ONSETS));
    w
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn sentence(
    rng: &mut ChaCha8Rng,
    lexicon: &[String],
    len: Range<usize>,
    planted: &[&str],
) -> String {
    let n = rng.gen_range(len);
    let mut words: Vec<String> = (0..n.saturating_sub(1))
        .map(|_| {
            if rng.gen_bool(0.3) {
                GLUE.choose(rng).unwrap().to_string()
            } else {
                lexicon.choose(rng).unwrap().clone()
            }
        })
        .collect();
    for &k in planted {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, k.to_owned());
    }
    let opener = if rng.gen_bool(0.5) {
        OPENERS.choose(rng).unwrap().to_string()
    } else {
        capitalize(lexicon.choose(rng).unwrap())
    };
    format!("{opener} {}.", words.join(" "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomDocConfig {
    pub sentences: Range<usize>,
    pub words_per_sentence: Range<usize>,
    pub lexicon_size: usize,
    /// Chance that a sentence is a verbatim copy of an earlier one.
    pub duplicate_rate: f64,
    /// Chance that a sentence boundary is a line break instead of a space.
    pub newline_rate: f64,
    /// Chance that a sentence contains an abbreviation such as "Dr.".
    pub abbreviation_rate: f64,
}

impl Default for RandomDocConfig {
    fn default() -> Self {
        Self {
            sentences: 2..51,
            words_per_sentence: 3..14,
            lexicon_size: 40,
            duplicate_rate: 0.03,
            newline_rate: 0.15,
            abbreviation_rate: 0.0,
        }
    }
}

/// A random article and its intended sentence texts, in order.
#[derive(Debug, Clone)]
pub struct RandomDoc {
    pub text: String,
    pub sentences: Vec<String>,
}

pub fn random_document(rng: &mut ChaCha8Rng, cfg: &RandomDocConfig) -> RandomDoc {
    let lexicon: Vec<String> = (0..cfg.lexicon_size.max(1))
        .map(|_| filler_word(rng))
        .collect();
    let n = rng.gen_range(cfg.sentences.clone());
    let mut sentences: Vec<String> = Vec::with_capacity(n);
    for _ in 0..n {
        if !sentences.is_empty() && rng.gen_bool(cfg.duplicate_rate) {
            let s = sentences.choose(rng).unwrap().clone();
            sentences.push(s);
            continue;
        }
        let mut s = sentence(rng, &lexicon, cfg.words_per_sentence.clone(), &[]);
        if rng.gen_bool(cfg.abbreviation_rate) {
            let abbr = ABBREVIATED.choose(rng).unwrap();
            let name = capitalize(&filler_word(rng));
            let body = s
                .split_once(' ')
                .map(|(_, rest)| rest)
                .unwrap_or("")
                .to_owned();
            s = format!("{} {abbr} {name} {body}", s.split(' ').next().unwrap());
        }
        sentences.push(s);
    }
    let mut text = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            text.push_str(if rng.gen_bool(cfg.newline_rate) {
                "\n"
            } else {
                " "
            });
        }
        text.push_str(s);
    }
    RandomDoc { text, sentences }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub filler_sentences: Range<usize>,
    pub evidence_sentences: usize,
    pub evidence_words: Range<usize>,
    pub filler_words: Range<usize>,
    pub keywords: usize,
    pub lexicon_size: usize,
}

impl Default for PlantedConfig {
    /// Evidence of 8 sentences with 20–25 words each, about 200 mock tokens.
    fn default() -> Self {
        Self {
            filler_sentences: 20..41,
            evidence_sentences: 8,
            evidence_words: 20..26,
            filler_words: 8..20,
            keywords: 3,
            lexicon_size: 80,
        }
    }
}

/// A QA example whose answer is a contiguous block of planted sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedExample {
    pub id: String,
    pub query: String,
    pub article: String,
    pub evidence: String,
    pub keywords: Vec<String>,
    /// Indices of the evidence sentences within the article.
    pub evidence_sentences: Range<usize>,
}

impl PlantedExample {
    pub fn to_eval_example(&self, dataset_tag: &str) -> EvalExample {
        EvalExample {
            id: self.id.clone(),
            query: self.query.clone(),
            article: self.article.clone(),
            gold_answers: vec![self.evidence.clone()],
            dataset_tag: dataset_tag.to_owned(),
        }
    }
}

/// The first evidence sentence carries every keyword; each later one
/// carries one or two. Filler never contains a keyword.
pub fn planted_example(
    rng: &mut ChaCha8Rng,
    id: impl Into<String>,
    cfg: &PlantedConfig,
) -> PlantedExample {
    let lexicon: Vec<String> = (0..cfg.lexicon_size.max(1))
        .map(|_| filler_word(rng))
        .collect();
    let mut keywords: Vec<String> = Vec::with_capacity(cfg.keywords);
    while keywords.len() < cfg.keywords.max(1) {
        let k = keyword(rng);
        if !keywords.contains(&k) {
            keywords.push(k);
        }
    }
    let kw: Vec<&str> = keywords.iter().map(String::as_str).collect();

    let fillers = rng.gen_range(cfg.filler_sentences.clone());
    let position = rng.gen_range(0..=fillers);
    let mut sentences: Vec<String> = Vec::with_capacity(fillers + cfg.evidence_sentences);
    for _ in 0..position {
        sentences.push(sentence(rng, &lexicon, cfg.filler_words.clone(), &[]));
    }
    for e in 0..cfg.evidence_sentences.max(1) {
        let planted: Vec<&str> = if e == 0 {
            kw.clone()
        } else {
            let n = rng.gen_range(1..=2.min(kw.len()));
            kw.choose_multiple(rng, n).copied().collect()
        };
        let len = cfg
            .evidence_words
            .start
            .saturating_sub(planted.len())
            .max(1)..cfg.evidence_words.end.saturating_sub(planted.len()).max(2);
        sentences.push(sentence(rng, &lexicon, len, &planted));
    }
    for _ in position..fillers {
        sentences.push(sentence(rng, &lexicon, cfg.filler_words.clone(), &[]));
    }

    let evidence_range = position..position + cfg.evidence_sentences.max(1);
    let mut article = String::new();
    let mut ev_start = 0;
    let mut ev_end = 0;
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            let inside = i > evidence_range.start && i < evidence_range.end;
            article.push_str(if !inside && rng.gen_bool(0.1) {
                "\n"
            } else {
                " "
            });
        }
        if i == evidence_range.start {
            ev_start = article.len();
        }
        article.push_str(s);
        if i + 1 == evidence_range.end {
            ev_end = article.len();
        }
    }
    let query = format!("What about {}?", kw.join(" "));
    PlantedExample {
        id: id.into(),
        query,
        evidence: article[ev_start..ev_end].to_owned(),
        article,
        keywords,
        evidence_sentences: evidence_range,
    }
}

/// `n` planted examples with ids `syn-0000`, `syn-0001`, ...
pub fn planted_corpus(seed: u64, n: usize, cfg: &PlantedConfig) -> Vec<PlantedExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| planted_example(&mut rng, format!("syn-{i:04}"), cfg))
        .collect()
}
