//! SQuAD v1.1 answer scoring, QA evaluation and critic diagnostics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::advgen::CriticDataset;
use crate::error::{Error, Result};
use crate::inference::{predict_baseline, predict_with_critic, InferenceConfig, SpanPrediction};
use crate::models::{SpanCritic, SpanProposer};
use crate::textio::{Dataset, QAExample};

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse
/// whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    no_punct
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn f1_single(pred: &str, gold: &str) -> f64 {
    let p: Vec<&str> = pred.split_whitespace().collect();
    let g: Vec<&str> = gold.split_whitespace().collect();
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / p.len() as f64;
    let recall = overlap as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Token-bag F1 and exact match, each maximized over the gold answers.
pub fn f1_em<S: AsRef<str>>(prediction: &str, golds: &[S]) -> (f64, f64) {
    let pred = normalize_answer(prediction);
    golds.iter().fold((0.0f64, 0.0f64), |(f1, em), gold| {
        let gold = normalize_answer(gold.as_ref());
        let e = if pred == gold { 1.0 } else { 0.0 };
        (f1.max(f1_single(&pred, &gold)), em.max(e))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub critic_prob: f32,
    pub rejections_used: usize,
    pub fell_back: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExampleScore {
    pub record: PredictionRecord,
    pub f1: f64,
    pub em: f64,
    /// F1 of the actor's first proposal, before any rejection.
    pub first_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1: f64,
    pub em: f64,
    pub n_examples: usize,
    pub rejection_rate: f64,
    pub rejected_then_improved_rate: f64,
    #[serde(skip)]
    pub examples: Vec<ExampleScore>,
}

impl MetricsReport {
    pub fn records_jsonl(&self) -> String {
        let mut out = String::new();
        for ex in &self.examples {
            out.push_str(&serde_json::to_string(&ex.record).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

fn score_example(example: &QAExample, pred: SpanPrediction) -> ExampleScore {
    let text = example.span_text(pred.start, pred.end);
    let (f1, em) = f1_em(&text, &example.gold_answers);
    let first_f1 = if (pred.first_start, pred.first_end) == (pred.start, pred.end) {
        f1
    } else {
        f1_em(&example.span_text(pred.first_start, pred.first_end), &example.gold_answers).0
    };
    ExampleScore {
        record: PredictionRecord {
            id: example.id.clone(),
            start: pred.start,
            end: pred.end,
            text,
            critic_prob: pred.critic_prob,
            rejections_used: pred.rejections_used,
            fell_back: pred.fell_back,
        },
        f1,
        em,
        first_f1,
    }
}

pub fn aggregate(examples: Vec<ExampleScore>) -> MetricsReport {
    let n = examples.len();
    let denom = n.max(1) as f64;
    let f1 = 100.0 * examples.iter().map(|e| e.f1).sum::<f64>() / denom;
    let em = 100.0 * examples.iter().map(|e| e.em).sum::<f64>() / denom;
    let rejected: Vec<&ExampleScore> = examples.iter().filter(|e| e.record.rejections_used > 0).collect();
    let improved = rejected.iter().filter(|e| e.f1 > e.first_f1).count();
    MetricsReport {
        f1,
        em,
        n_examples: n,
        rejection_rate: rejected.len() as f64 / denom,
        rejected_then_improved_rate: if rejected.is_empty() {
            0.0
        } else {
            improved as f64 / rejected.len() as f64
        },
        examples,
    }
}

/// Score every example, fanning out over `workers` threads. Results keep
/// dataset order regardless of the worker count.
pub fn evaluate_qa(
    actor: &dyn SpanProposer,
    critic: Option<&dyn SpanCritic>,
    dataset: &Dataset,
    cfg: &InferenceConfig,
    workers: usize,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let run = |ex: &QAExample| -> Result<ExampleScore> {
        let pred = match critic {
            Some(c) => predict_with_critic(actor, c, ex, cfg)?,
            None => predict_baseline(actor, ex, cfg.max_span_len)?,
        };
        Ok(score_example(ex, pred))
    };
    let examples: Vec<ExampleScore> = if workers <= 1 || dataset.len() < 2 {
        dataset.examples.iter().map(run).collect::<Result<_>>()?
    } else {
        let chunk = dataset.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = dataset
                .examples
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(run).collect::<Result<Vec<_>>>()))
                .collect();
            let mut all = Vec::with_capacity(dataset.len());
            for h in handles {
                all.extend(h.join().map_err(|_| Error::Invariant("evaluation worker panicked".into()))??);
            }
            Ok::<_, Error>(all)
        })?
    };
    Ok(aggregate(examples))
}

/// Fraction of pairs where `p_genuine >= 0.5` agrees with the label.
pub fn evaluate_critic(critic: &dyn SpanCritic, data: &CriticDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Data("cannot evaluate a critic on an empty corpus".into()));
    }
    let mut correct = 0usize;
    for pair in &data.pairs {
        let p = critic.p_genuine(&pair.query, &pair.span)?;
        if (p >= 0.5) == pair.label.is_genuine() {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub bin_edges: Vec<f64>,
    pub genuine: Vec<u64>,
    pub adversarial: Vec<u64>,
    pub n_genuine: u64,
    pub n_adversarial: u64,
}

/// Equal-width bin index of `p` in `[0, 1]`; `p = 1` lands in the last bin.
pub fn bin_index(p: f64, n_bins: usize) -> usize {
    ((p.clamp(0.0, 1.0) * n_bins as f64).floor() as usize).min(n_bins - 1)
}

pub fn histogram_from_probs(probs: &[(f64, bool)], n_bins: usize) -> Result<HistogramReport> {
    if n_bins < 2 {
        return Err(Error::Config(format!("histogram needs at least 2 bins, got {n_bins}")));
    }
    let mut report = HistogramReport {
        bin_edges: (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect(),
        genuine: vec![0; n_bins],
        adversarial: vec![0; n_bins],
        n_genuine: 0,
        n_adversarial: 0,
    };
    for &(p, genuine) in probs {
        let b = bin_index(p, n_bins);
        if genuine {
            report.genuine[b] += 1;
            report.n_genuine += 1;
        } else {
            report.adversarial[b] += 1;
            report.n_adversarial += 1;
        }
    }
    Ok(report)
}

pub fn critic_probability_histogram(
    critic: &dyn SpanCritic,
    data: &CriticDataset,
    n_bins: usize,
) -> Result<HistogramReport> {
    let probs = data
        .pairs
        .iter()
        .map(|pair| Ok((f64::from(critic.p_genuine(&pair.query, &pair.span)?), pair.label.is_genuine())))
        .collect::<Result<Vec<_>>>()?;
    histogram_from_probs(&probs, n_bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advgen::{CriticPair, PairLabel};
    use proptest::prelude::*;

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_answer("The Classical Element!"), "classical element");
        assert_eq!(normalize_answer("fire"), "fire");
        assert_eq!(normalize_answer("  a  b "), "b");
        assert_eq!(normalize_answer("An apple, the pear."), "apple pear");
        assert_eq!(normalize_answer("theory"), "theory");
    }

    #[test]
    fn f1_em_fixtures() {
        assert_eq!(f1_em("fire", &["fire"]), (1.0, 1.0));
        let (f1, em) = f1_em("x b c", &["b c d"]);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(em, 0.0);
        assert_eq!(f1_em("x", &["y", "x"]), (1.0, 1.0));
        assert_eq!(f1_em("", &["fire"]), (0.0, 0.0));
        assert_eq!(f1_em("the", &["a"]), (1.0, 1.0));
    }

    struct Pinned(f32);
    impl SpanCritic for Pinned {
        fn p_genuine(&self, _: &[String], _: &[String]) -> Result<f32> {
            Ok(self.0)
        }
    }

    fn corpus() -> CriticDataset {
        let pair = |span: &str, label| CriticPair {
            source_qid: "q".into(),
            query: vec!["<bos>".into()],
            span: vec![span.into()],
            label,
        };
        CriticDataset {
            pairs: vec![
                pair("good", PairLabel::Genuine),
                pair("bad", PairLabel::Adversarial),
                pair("good", PairLabel::Genuine),
                pair("bad", PairLabel::Adversarial),
            ],
        }
    }

    struct Oracle;
    impl SpanCritic for Oracle {
        fn p_genuine(&self, _: &[String], span: &[String]) -> Result<f32> {
            Ok(if span[0] == "good" { 0.9 } else { 0.1 })
        }
    }

    #[test]
    fn critic_accuracy_bounds() {
        assert_eq!(evaluate_critic(&Pinned(0.5), &corpus()).unwrap(), 0.5);
        assert_eq!(evaluate_critic(&Oracle, &corpus()).unwrap(), 1.0);
        assert!(evaluate_critic(&Oracle, &CriticDataset::default()).is_err());
    }

    #[test]
    fn histogram_point_mass_and_binning() {
        let h = critic_probability_histogram(&Pinned(0.5), &corpus(), 10).unwrap();
        assert_eq!(h.genuine.iter().sum::<u64>(), 2);
        assert_eq!(h.genuine[5], 2);
        assert_eq!(h.adversarial[5], 2);
        assert_eq!(h.bin_edges.len(), 11);

        let h = critic_probability_histogram(&Oracle, &corpus(), 2).unwrap();
        assert_eq!(h.adversarial, [2, 0]);
        assert_eq!(h.genuine, [0, 2]);
        assert!(histogram_from_probs(&[], 1).is_err());
        assert_eq!(bin_index(1.0, 4), 3);
    }

    proptest! {
        #[test]
        fn f1_is_symmetric_and_em_implies_f1(a in "[a-e ,.!]{0,12}", b in "[a-e ,.!]{0,12}") {
            let (f_ab, em_ab) = f1_em(&a, &[&b]);
            let (f_ba, em_ba) = f1_em(&b, &[&a]);
            prop_assert!((f_ab - f_ba).abs() < 1e-12);
            prop_assert_eq!(em_ab, em_ba);
            if em_ab == 1.0 {
                prop_assert_eq!(f_ab, 1.0);
            }
            prop_assert!((0.0..=1.0).contains(&f_ab));
        }

        #[test]
        fn histogram_conserves_counts(probs in proptest::collection::vec((0.0f64..=1.0, any::<bool>()), 0..200), bins in 2usize..120) {
            let h = histogram_from_probs(&probs, bins).unwrap();
            let g = probs.iter().filter(|p| p.1).count() as u64;
            prop_assert_eq!(h.genuine.iter().sum::<u64>(), g);
            prop_assert_eq!(h.adversarial.iter().sum::<u64>(), probs.len() as u64 - g);
            prop_assert!(h.bin_edges.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
