//! Adversarial span generation and the critic's pair corpus.
//!
//! A negative span keeps the golden span's length; each eligible position is
//! independently replaced, with probability `replacement_prob`, by a token
//! drawn uniformly (with replacement) from the question. The critic query is
//! the passage text before the span, never the question.

use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::rng::{substream, Rng64};
use crate::textio::{is_stop_word, Dataset, QAExample, BOS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplacementScope {
    AllWords,
    NonStopWords,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub replacement_prob: f64,
    pub scope: ReplacementScope,
    pub query_window: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            replacement_prob: 0.75,
            scope: ReplacementScope::AllWords,
            query_window: 64,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.replacement_prob) {
            return Err(Error::Config(format!(
                "replacement_prob {} outside [0, 1]",
                self.replacement_prob
            )));
        }
        if self.query_window == 0 {
            return Err(Error::Config("query_window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairLabel {
    Adversarial = 0,
    Genuine = 1,
}

impl PairLabel {
    pub fn is_genuine(self) -> bool {
        self == PairLabel::Genuine
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticPair {
    pub source_qid: String,
    pub query: Vec<String>,
    pub span: Vec<String>,
    pub label: PairLabel,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CriticDataset {
    pub pairs: Vec<CriticPair>,
}

/// Per-position trace of one generated span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativeSpan {
    pub tokens: Vec<String>,
    /// Position was eligible for replacement under the scope.
    pub eligible: Vec<bool>,
    /// Position was replaced (even if the drawn token equals the original).
    pub replaced: Vec<bool>,
}

pub fn generate_negative_span_traced(
    gold_span: &[String],
    question: &[String],
    cfg: &GenConfig,
    rng: &mut Rng64,
) -> Result<NegativeSpan> {
    if question.is_empty() {
        return Err(Error::Generation("empty question: no replacement source"));
    }
    if gold_span.is_empty() {
        return Err(Error::Generation("empty golden span"));
    }
    let mut out = NegativeSpan {
        tokens: Vec::with_capacity(gold_span.len()),
        eligible: Vec::with_capacity(gold_span.len()),
        replaced: Vec::with_capacity(gold_span.len()),
    };
    for tok in gold_span {
        let eligible = match cfg.scope {
            ReplacementScope::AllWords => true,
            ReplacementScope::NonStopWords => !is_stop_word(tok),
        };
        let replace = eligible && rng.gen::<f64>() < cfg.replacement_prob;
        if replace {
            out.tokens.push(question[rng.gen_range(0..question.len())].clone());
        } else {
            out.tokens.push(tok.clone());
        }
        out.eligible.push(eligible);
        out.replaced.push(replace);
    }
    Ok(out)
}

pub fn generate_negative_span(
    gold_span: &[String],
    question: &[String],
    cfg: &GenConfig,
    rng: &mut Rng64,
) -> Result<Vec<String>> {
    generate_negative_span_traced(gold_span, question, cfg, rng).map(|n| n.tokens)
}

/// `<bos>` followed by the last `window` passage tokens before `start`.
pub fn critic_query(passage: &[String], start: usize, window: usize) -> Vec<String> {
    let from = start.saturating_sub(window);
    std::iter::once(BOS.to_owned())
        .chain(passage[from..start].iter().cloned())
        .collect()
}

pub fn build_critic_pairs(
    example: &QAExample,
    cfg: &GenConfig,
    rng: &mut Rng64,
) -> Result<(CriticPair, CriticPair)> {
    let (start, end) = example.gold_span;
    if start > end || end >= example.passage.len() {
        return Err(Error::Data(format!("invalid gold span for {}", example.id)));
    }
    let query = critic_query(&example.passage.tokens, start, cfg.query_window);
    let gold = example.span_tokens(start, end).to_vec();
    let negative = generate_negative_span(&gold, &example.question.tokens, cfg, rng)?;
    Ok((
        CriticPair {
            source_qid: example.id.clone(),
            query: query.clone(),
            span: gold,
            label: PairLabel::Genuine,
        },
        CriticPair {
            source_qid: example.id.clone(),
            query,
            span: negative,
            label: PairLabel::Adversarial,
        },
    ))
}

pub fn build_critic_dataset(dataset: &Dataset, cfg: &GenConfig) -> Result<CriticDataset> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("cannot build critic pairs from an empty dataset".into()));
    }
    let mut pairs = Vec::with_capacity(dataset.len() * 2);
    for ex in &dataset.examples {
        let mut rng = substream(cfg.seed, &ex.id);
        let (genuine, adversarial) = build_critic_pairs(ex, cfg, &mut rng)?;
        pairs.push(genuine);
        pairs.push(adversarial);
    }
    Ok(CriticDataset { pairs })
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    qid: String,
    query: Vec<String>,
    span: Vec<String>,
    label: u8,
}

impl CriticDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_genuine(&self) -> usize {
        self.pairs.iter().filter(|p| p.label.is_genuine()).count()
    }

    pub fn n_adversarial(&self) -> usize {
        self.len() - self.n_genuine()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            let rec = PairRecord {
                qid: p.source_qid.clone(),
                query: p.query.clone(),
                span: p.span.clone(),
                label: p.label as u8,
            };
            out.push_str(&serde_json::to_string(&rec).expect("plain record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write(path, self.to_jsonl().as_bytes())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (lineno, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PairRecord = serde_json::from_str(&line).map_err(|e| Error::json(path, e))?;
            let label = match rec.label {
                0 => PairLabel::Adversarial,
                1 => PairLabel::Genuine,
                other => {
                    return Err(Error::Data(format!(
                        "{}:{}: label {other} is not 0 or 1",
                        path.display(),
                        lineno + 1
                    )))
                }
            };
            if rec.query.is_empty() || rec.span.is_empty() {
                return Err(Error::Data(format!(
                    "{}:{}: empty query or span",
                    path.display(),
                    lineno + 1
                )));
            }
            pairs.push(CriticPair {
                source_qid: rec.qid,
                query: rec.query,
                span: rec.span,
                label,
            });
        }
        Ok(Self { pairs })
    }
}
