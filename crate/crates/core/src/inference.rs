//! Critic-gated span selection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::advgen::critic_query;
use crate::error::{Error, Result};
use crate::models::{ActorOutput, SpanCritic, SpanProposer};
use crate::textio::QAExample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionMode {
    /// Exclude the rejected start as a start and the rejected end as an end.
    Endpoints,
    /// Exclude every position inside the rejected span.
    Span,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub threshold: f64,
    pub rejection_mode: RejectionMode,
    pub reject_budget: usize,
    pub max_span_len: usize,
    pub query_window: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            threshold: 0.3,
            rejection_mode: RejectionMode::Endpoints,
            reject_budget: 1,
            max_span_len: 30,
            query_window: 64,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.max_span_len == 0 || self.query_window == 0 {
            return Err(Error::Config("max_span_len and query_window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExclusionSet {
    pub starts: BTreeSet<usize>,
    pub ends: BTreeSet<usize>,
    pub positions: BTreeSet<usize>,
}

impl ExclusionSet {
    pub fn is_empty(&self) -> bool {
        self.starts.is_empty() && self.ends.is_empty() && self.positions.is_empty()
    }

    pub fn reject(&mut self, span: Candidate, mode: RejectionMode) {
        match mode {
            RejectionMode::Endpoints => {
                self.starts.insert(span.start);
                self.ends.insert(span.end);
            }
            RejectionMode::Span => self.positions.extend(span.start..=span.end),
        }
    }

    /// Whether `[start, end]` avoids every exclusion.
    pub fn allows(&self, start: usize, end: usize) -> bool {
        !self.starts.contains(&start)
            && !self.ends.contains(&end)
            && self.positions.range(start..=end).next().is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub start: usize,
    pub end: usize,
    pub score: f32,
}

/// Best `(s, e)` by `start[s] + end[e]` subject to `s <= e`,
/// `e - s < max_span_len` and the exclusions. Ties go to the smallest `s`,
/// then the smallest `e`.
pub fn select_span(
    start_logits: &[f32],
    end_logits: &[f32],
    exclusions: &ExclusionSet,
    max_span_len: usize,
) -> Result<Option<Candidate>> {
    if start_logits.len() != end_logits.len() {
        return Err(Error::Shape {
            op: "select_span",
            lhs: [1, start_logits.len()],
            rhs: [1, end_logits.len()],
        });
    }
    let n = start_logits.len();
    let mut best: Option<Candidate> = None;
    for s in 0..n {
        if exclusions.starts.contains(&s) {
            continue;
        }
        // first excluded position at or after s bounds the span
        let blocked = exclusions.positions.range(s..).next().copied().unwrap_or(n);
        let limit = n.min(s + max_span_len).min(blocked);
        for e in s..limit {
            if exclusions.ends.contains(&e) {
                continue;
            }
            let score = start_logits[s] + end_logits[e];
            if best.is_none_or(|b| score > b.score) {
                best = Some(Candidate { start: s, end: e, score });
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub start: usize,
    pub end: usize,
    pub joint_score: f32,
    pub critic_prob: f32,
    pub rejections_used: usize,
    pub fell_back: bool,
    /// The actor's unconstrained first proposal.
    pub first_start: usize,
    pub first_end: usize,
    pub first_score: f32,
}

fn first_proposal(actor: &dyn SpanProposer, example: &QAExample, max_span_len: usize) -> Result<(ActorOutput, Candidate)> {
    let out = actor.propose(&example.question.tokens, &example.passage.tokens)?;
    let first = select_span(&out.start_logits, &out.end_logits, &ExclusionSet::default(), max_span_len)?
        .ok_or(Error::EmptySequence("passage"))?;
    Ok((out, first))
}

fn prediction(c: Candidate, first: Candidate, critic_prob: f32, used: usize, fell_back: bool) -> SpanPrediction {
    SpanPrediction {
        start: c.start,
        end: c.end,
        joint_score: c.score,
        critic_prob,
        rejections_used: used,
        fell_back,
        first_start: first.start,
        first_end: first.end,
        first_score: first.score,
    }
}

pub fn predict_baseline(actor: &dyn SpanProposer, example: &QAExample, max_span_len: usize) -> Result<SpanPrediction> {
    let (_, first) = first_proposal(actor, example, max_span_len)?;
    Ok(prediction(first, first, 1.0, 0, false))
}

/// Propose, consult the critic, and re-select with exclusions while the
/// critic's genuineness probability stays below the threshold and budget
/// remains. If exclusions leave no candidate, the first proposal is returned
/// with `fell_back` set.
pub fn predict_with_critic(
    actor: &dyn SpanProposer,
    critic: &dyn SpanCritic,
    example: &QAExample,
    cfg: &InferenceConfig,
) -> Result<SpanPrediction> {
    let (out, first) = first_proposal(actor, example, cfg.max_span_len)?;
    let tokens = &example.passage.tokens;
    let score = |c: Candidate| -> Result<f32> {
        let query = critic_query(tokens, c.start, cfg.query_window);
        critic.p_genuine(&query, &tokens[c.start..=c.end])
    };

    let first_p = score(first)?;
    let mut current = first;
    let mut p = first_p;
    let mut exclusions = ExclusionSet::default();
    let mut used = 0;
    loop {
        if f64::from(p) >= cfg.threshold || used >= cfg.reject_budget {
            return Ok(prediction(current, first, p, used, false));
        }
        exclusions.reject(current, cfg.rejection_mode);
        used += 1;
        match select_span(&out.start_logits, &out.end_logits, &exclusions, cfg.max_span_len)? {
            Some(next) => {
                current = next;
                p = score(current)?;
            }
            None => return Ok(prediction(first, first, first_p, used, true)),
        }
    }
}
