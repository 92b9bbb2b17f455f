//! Critic pre-training, then actor training against the frozen critic.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::advgen::{critic_query, CriticDataset, CriticPair};
use crate::error::{Error, Result};
use crate::eval::f1_em;
use crate::inference::{select_span, ExclusionSet};
use crate::models::{critic_graph, ActorModel, ActorOutput, CriticModel, SpanCritic};
use crate::ndmath::{self, AdamConfig, Gradients, Graph, OptimizerState, ParamStore, Real, Var};
use crate::rng::{fnv1a, seeded};
use crate::textio::{Dataset, QAExample, Vocabulary};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// `0.5 * ce_span + 0.5 * bce`.
    Additive,
    /// `(1 + bce) * ce_span`.
    #[default]
    Reweight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub loss_mode: LossMode,
    pub bce_cap: f64,
    pub clip_norm: f64,
    /// Share of critic pairs held out (by source question) for accuracy.
    pub holdout_fraction: f64,
    pub max_span_len: usize,
    pub query_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 1e-3,
            batch_size: 16,
            seed: 0,
            loss_mode: LossMode::Reweight,
            bce_cap: 5.0,
            clip_norm: 5.0,
            holdout_fraction: 0.1,
            max_span_len: 30,
            query_window: 64,
        }
    }
}

impl TrainConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.bce_cap > 0.0) {
            return Err(Error::Config(format!("bce_cap must be positive, got {}", self.bce_cap)));
        }
        if !(self.lr > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::Config("lr and clip_norm must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config(format!("holdout_fraction {} outside [0, 1)", self.holdout_fraction)));
        }
        if self.max_span_len == 0 || self.query_window == 0 {
            return Err(Error::Config("max_span_len and query_window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ce_start: f64,
    pub ce_end: f64,
    pub ce_span: f64,
    pub bce: f64,
    pub combined: f64,
}

/// `-ln p` with `p` clamped away from 0 and 1, capped at `cap`.
pub fn capped_bce(p_genuine: f64, cap: f64) -> f64 {
    ndmath::binary_cross_entropy(p_genuine, true).min(cap)
}

impl LossBreakdown {
    pub fn from_parts(ce_start: f64, ce_end: f64, p_genuine: f64, mode: LossMode, bce_cap: f64) -> Self {
        let ce_span = (ce_start + ce_end) / 2.0;
        let bce = capped_bce(p_genuine, bce_cap);
        let combined = match mode {
            LossMode::Additive => 0.5 * ce_span + 0.5 * bce,
            LossMode::Reweight => (1.0 + bce) * ce_span,
        };
        Self {
            ce_start,
            ce_end,
            ce_span,
            bce,
            combined,
        }
    }
}

pub fn combined_loss(
    out: &ActorOutput,
    gold: (usize, usize),
    p_genuine: f64,
    mode: LossMode,
    bce_cap: f64,
) -> Result<LossBreakdown> {
    let ce_start = ndmath::cross_entropy(&out.start_logits, gold.0)?;
    let ce_end = ndmath::cross_entropy(&out.end_logits, gold.1)?;
    Ok(LossBreakdown::from_parts(
        f64::from(ce_start),
        f64::from(ce_end),
        p_genuine,
        mode,
        bce_cap,
    ))
}

/// Which scalar the actor gradient is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Combined(LossMode),
    /// The span cross entropy alone, ignoring the critic.
    SpanOnly,
}

/// Joint loss graph. The critic enters only as the constant `p_genuine`.
pub fn combined_loss_graph<T: Real>(
    g: &mut Graph<'_, T>,
    start: Var,
    end: Var,
    gold: (usize, usize),
    p_genuine: f64,
    objective: Objective,
    bce_cap: f64,
) -> Result<(Var, LossBreakdown)> {
    let ce_s = g.cross_entropy(start, gold.0)?;
    let ce_e = g.cross_entropy(end, gold.1)?;
    let sum = g.add(ce_s, ce_e)?;
    let ce_span = g.scale(sum, T::lit(0.5));
    let mode = match objective {
        Objective::Combined(m) => m,
        Objective::SpanOnly => LossMode::Additive,
    };
    let parts = LossBreakdown::from_parts(
        g.value(ce_s).item().to_f64().unwrap_or(f64::NAN),
        g.value(ce_e).item().to_f64().unwrap_or(f64::NAN),
        p_genuine,
        mode,
        bce_cap,
    );
    let loss = match objective {
        Objective::SpanOnly => ce_span,
        Objective::Combined(LossMode::Additive) => {
            let half = g.scale(ce_span, T::lit(0.5));
            let bce = g.constant(ndmath::Tensor::scalar(T::lit(0.5 * parts.bce)));
            g.add(half, bce)?
        }
        Objective::Combined(LossMode::Reweight) => g.scale(ce_span, T::lit(1.0 + parts.bce)),
    };
    Ok((loss, parts))
}

/// One actor example: forward, unconstrained argmax proposal, critic score
/// of the proposal, then gradients of the chosen objective.
#[derive(Clone, Debug)]
pub struct ActorStep {
    pub grads: Gradients<f32>,
    pub loss: LossBreakdown,
    pub proposal: (usize, usize),
    pub p_genuine: f32,
}

pub fn actor_example_step(
    actor: &ActorModel,
    critic: &dyn SpanCritic,
    example: &QAExample,
    objective: Objective,
    cfg: &TrainConfig,
) -> Result<ActorStep> {
    let q = actor.vocab.encode(&example.question.tokens);
    let p = actor.vocab.encode(&example.passage.tokens);
    let mut g = Graph::new();
    let (start, end) = actor.forward(&mut g, &q, &p)?;
    let proposal = select_span(g.value(start).data(), g.value(end).data(), &ExclusionSet::default(), cfg.max_span_len)?
        .ok_or(Error::EmptySequence("passage"))?;
    let tokens = &example.passage.tokens;
    let query = critic_query(tokens, proposal.start, cfg.query_window);
    let p_genuine = critic.p_genuine(&query, &tokens[proposal.start..=proposal.end])?;
    let (loss, parts) = combined_loss_graph(
        &mut g,
        start,
        end,
        example.gold_span,
        f64::from(p_genuine),
        objective,
        cfg.bce_cap,
    )?;
    Ok(ActorStep {
        grads: g.backward(loss)?,
        loss: parts,
        proposal: (proposal.start, proposal.end),
        p_genuine,
    })
}

/// One line of the JSON Lines training log.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ce_span: Option<f64>,
    pub bce: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combined: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critic_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_acc: Option<f64>,
    /// Exact-match rate (x100) of the argmax proposals seen during the epoch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    pub steps: usize,
}

pub fn log_jsonl(log: &[EpochLog]) -> String {
    log.iter()
        .map(|l| serde_json::to_string(l).expect("log serializes") + "\n")
        .collect()
}

fn apply_batch(
    params: &mut ParamStore<f32>,
    opt: &mut OptimizerState<f32>,
    batch: Vec<Gradients<f32>>,
    clip_norm: f64,
) -> Result<()> {
    let scale = 1.0 / batch.len() as f32;
    for grads in &batch {
        params.accumulate(grads, scale)?;
    }
    params.clip_grad_norm(clip_norm as f32);
    opt.step(params)
}

/// Deterministic held-out membership by hashing the source question id.
pub fn is_holdout(qid: &str, fraction: f64) -> bool {
    fraction > 0.0 && (fnv1a(qid.as_bytes()) % 10_000) < (fraction * 10_000.0).round() as u64
}

pub fn split_pairs(data: &CriticDataset, fraction: f64) -> (CriticDataset, CriticDataset) {
    let (held, train): (Vec<CriticPair>, Vec<CriticPair>) =
        data.pairs.iter().cloned().partition(|p| is_holdout(&p.source_qid, fraction));
    (CriticDataset { pairs: train }, CriticDataset { pairs: held })
}

/// Vocabulary over every token in a pair corpus.
pub fn critic_vocab(data: &CriticDataset) -> Vocabulary {
    Vocabulary::build(data.pairs.iter().flat_map(|p| p.query.iter().chain(&p.span)).map(String::as_str))
}

fn accuracy(critic: &CriticModel, data: &CriticDataset) -> Result<Option<f64>> {
    if data.is_empty() {
        return Ok(None);
    }
    crate::eval::evaluate_critic(critic, data).map(Some)
}

/// Mini-batch Adam on mean binary cross entropy. Logs held-out accuracy
/// per epoch, or training accuracy when nothing is held out.
pub fn train_critic(critic: &mut CriticModel, data: &CriticDataset, cfg: &TrainConfig) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Data("critic corpus is empty".into()));
    }
    let (train, held) = split_pairs(data, cfg.holdout_fraction);
    if train.is_empty() {
        return Err(Error::Data("holdout split left no training pairs".into()));
    }
    let encoded: Vec<(Vec<usize>, Vec<usize>, bool)> = train
        .pairs
        .iter()
        .map(|p| (critic.vocab.encode(&p.query), critic.vocab.encode(&p.span), p.label.is_genuine()))
        .collect();
    let mut rng = seeded(cfg.seed);
    let mut opt = OptimizerState::new(AdamConfig::with_lr(cfg.lr));
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let head_layers = critic.head_layers();
    critic.params.zero_grad();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0f64;
        let mut steps = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let (q, s, label) = &encoded[i];
                let mut g = Graph::new();
                let prob = critic_graph(&mut g, &critic.params, head_layers, q, s)?;
                let loss = g.binary_cross_entropy(prob, *label)?;
                total += f64::from(g.value(loss).item());
                batch.push(g.backward(loss)?);
            }
            apply_batch(&mut critic.params, &mut opt, batch, cfg.clip_norm)?;
            steps += 1;
        }
        let entry = EpochLog {
            epoch,
            bce: total / encoded.len() as f64,
            critic_acc: accuracy(critic, &held)?,
            train_acc: if held.is_empty() { accuracy(critic, &train)? } else { None },
            steps,
            ..EpochLog::default()
        };
        log::info!("critic epoch {epoch}: bce {:.4} acc {:?}", entry.bce, entry.critic_acc.or(entry.train_acc));
        log.push(entry);
    }
    Ok(log)
}

/// Actor training against any critic; the critic is only ever queried.
pub fn train_actor_with(
    actor: &mut ActorModel,
    critic: &dyn SpanCritic,
    dataset: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("actor training set is empty".into()));
    }
    let objective = Objective::Combined(cfg.loss_mode);
    let mut rng = seeded(cfg.seed);
    let mut opt = OptimizerState::new(AdamConfig::with_lr(cfg.lr));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    actor.params.zero_grad();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut ce, mut bce, mut comb, mut em) = (0.0, 0.0, 0.0, 0.0);
        let mut steps = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let ex = &dataset.examples[i];
                let step = actor_example_step(actor, critic, ex, objective, cfg)?;
                ce += step.loss.ce_span;
                bce += step.loss.bce;
                comb += step.loss.combined;
                em += f1_em(&ex.span_text(step.proposal.0, step.proposal.1), &ex.gold_answers).1;
                batch.push(step.grads);
            }
            apply_batch(&mut actor.params, &mut opt, batch, cfg.clip_norm)?;
            steps += 1;
        }
        let n = dataset.len() as f64;
        let entry = EpochLog {
            epoch,
            ce_span: Some(ce / n),
            bce: bce / n,
            combined: Some(comb / n),
            em: Some(100.0 * em / n),
            steps,
            ..EpochLog::default()
        };
        log::info!("actor epoch {epoch}: ce_span {:.4} bce {:.4} em {:.1}", ce / n, bce / n, 100.0 * em / n);
        log.push(entry);
    }
    Ok(log)
}

/// Actor training with a frozen critic checkpoint attached. Aborts if the
/// critic's parameters differ afterwards.
pub fn train_actor(
    actor: &mut ActorModel,
    critic: &CriticModel,
    dataset: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochLog>> {
    let before = critic.params.digest();
    let log = train_actor_with(actor, critic, dataset, cfg)?;
    if critic.params.digest() != before {
        return Err(Error::Invariant("frozen critic parameters changed during actor training".into()));
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advgen::{build_critic_dataset, GenConfig};
    use crate::inference::predict_baseline;
    use crate::models::{ActorHyper, CriticHyper};
    use crate::synth::{synth_squad_json, SynthConfig};
    use crate::textio::parse_squad;
    use std::path::Path;

    fn fixture(n_passages: usize, seed: u64) -> Dataset {
        let cfg = SynthConfig {
            n_passages,
            facts_per_passage: 2,
            max_answer_len: 2,
            seed,
            ..SynthConfig::default()
        };
        parse_squad(&synth_squad_json(&cfg).unwrap(), Path::new("fixture")).unwrap()
    }

    fn small_actor(ds: &Dataset) -> ActorModel {
        let hyper = ActorHyper { embed_dim: 16, hidden: 16, init_scale: 0.1 };
        ActorModel::new(hyper, ds.vocab.clone(), 3).unwrap()
    }

    fn small_critic(vocab: Vocabulary) -> CriticModel {
        let hyper = CriticHyper {
            embed_dim: 16,
            hidden: 16,
            head_widths: vec![16, 8],
            init_scale: 0.1,
        };
        CriticModel::new(hyper, vocab, 4).unwrap()
    }

    struct Pinned(f32);
    impl SpanCritic for Pinned {
        fn p_genuine(&self, _: &[String], _: &[String]) -> Result<f32> {
            Ok(self.0)
        }
    }

    #[test]
    fn loss_formulas() {
        let b = LossBreakdown::from_parts(1.2, 0.8, 0.5, LossMode::Additive, 5.0);
        assert_eq!(b.ce_span, 1.0);
        assert!((b.bce - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((b.combined - 0.846_573_590_279_972_6).abs() < 1e-12);
        let r = LossBreakdown::from_parts(1.2, 0.8, 0.5, LossMode::Reweight, 5.0);
        assert!((r.combined - 1.693_147_180_559_945_3).abs() < 1e-12);

        let confident = LossBreakdown::from_parts(1.0, 3.0, 1.0 - 1e-9, LossMode::Additive, 5.0);
        assert!(confident.bce < 1e-6);
        assert!((confident.combined - 1.0).abs() < 1e-6);
        let capped = LossBreakdown::from_parts(1.0, 3.0, 1e-9, LossMode::Reweight, 5.0);
        assert_eq!(capped.bce, 5.0);
        assert_eq!(capped.combined, 12.0);
    }

    #[test]
    fn graph_loss_matches_direct_computation() {
        let ds = fixture(2, 1);
        let actor = small_actor(&ds);
        let ex = &ds.examples[0];
        let out = crate::models::SpanProposer::propose(&actor, &ex.question.tokens, &ex.passage.tokens).unwrap();
        let direct = combined_loss(&out, ex.gold_span, 0.3, LossMode::Reweight, 5.0).unwrap();
        let cfg = TrainConfig::default();
        let step = actor_example_step(&actor, &Pinned(0.3), ex, Objective::Combined(LossMode::Reweight), &cfg).unwrap();
        assert!((step.loss.combined - direct.combined).abs() < 1e-5);
        assert_eq!(step.loss.ce_span, (step.loss.ce_start + step.loss.ce_end) / 2.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            TrainConfig { epochs: 0, ..TrainConfig::default() },
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
            TrainConfig { bce_cap: 0.0, ..TrainConfig::default() },
            TrainConfig { holdout_fraction: 1.0, ..TrainConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
        let ds = fixture(4, 0);
        let pairs = build_critic_dataset(&ds, &GenConfig::default()).unwrap();
        let mut critic = small_critic(critic_vocab(&pairs));
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train_critic(&mut critic, &pairs, &cfg).is_err());
        assert!(train_critic(&mut critic, &CriticDataset::default(), &TrainConfig::default()).is_err());
    }

    fn flat(g: &Gradients<f32>) -> Vec<f64> {
        g.values().flat_map(|t| t.data().iter().map(|&x| f64::from(x))).collect()
    }

    fn rel_diff(a: &[f64], b: &[f64], scale: f64) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - scale * y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| (scale * y).powi(2)).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn additive_gradient_is_half_the_span_gradient() {
        let ds = fixture(6, 2);
        let actor = small_actor(&ds);
        let cfg = TrainConfig::default();
        for (k, ex) in ds.examples.iter().enumerate() {
            let critic = Pinned(0.05 + 0.08 * k as f32);
            let comb = actor_example_step(&actor, &critic, ex, Objective::Combined(LossMode::Additive), &cfg).unwrap();
            let span = actor_example_step(&actor, &critic, ex, Objective::SpanOnly, &cfg).unwrap();
            assert!(rel_diff(&flat(&comb.grads), &flat(&span.grads), 0.5) < 1e-6);
        }
    }

    fn grads_f64(store: &ParamStore<f64>, actor: &ActorModel, ex: &QAExample, objective: Objective) -> Vec<f64> {
        let mut g = Graph::new();
        let q = actor.vocab.encode(&ex.question.tokens);
        let p = actor.vocab.encode(&ex.passage.tokens);
        let (start, end) = crate::models::actor_graph(&mut g, store, &q, &p).unwrap();
        let (loss, _) = combined_loss_graph(&mut g, start, end, ex.gold_span, 0.5, objective, 5.0).unwrap();
        g.backward(loss).unwrap().values().flat_map(|t| t.data().to_vec()).collect()
    }

    #[test]
    fn reweight_at_half_scales_by_one_plus_ln2() {
        let ds = fixture(3, 5);
        let actor = small_actor(&ds);
        let store = actor.params.cast::<f64>();
        let factor = 1.0 + std::f64::consts::LN_2;
        for ex in &ds.examples {
            let comb = grads_f64(&store, &actor, ex, Objective::Combined(LossMode::Reweight));
            let span = grads_f64(&store, &actor, ex, Objective::SpanOnly);
            assert!(rel_diff(&comb, &span, factor) < 1e-6);
        }
    }

    fn mean_ce(actor: &ActorModel, ds: &Dataset) -> f64 {
        let cfg = TrainConfig::default();
        let total: f64 = ds
            .examples
            .iter()
            .map(|ex| actor_example_step(actor, &Pinned(0.5), ex, Objective::SpanOnly, &cfg).unwrap().loss.ce_span)
            .sum();
        total / ds.len() as f64
    }

    #[test]
    fn actor_overfits_sixteen_examples() {
        let ds = fixture(8, 11);
        assert_eq!(ds.len(), 16);
        let mut actor = small_actor(&ds);
        let initial = mean_ce(&actor, &ds);
        let cfg = TrainConfig {
            epochs: 31,
            batch_size: 1,
            lr: 0.03,
            ..TrainConfig::default()
        };
        let log = train_actor_with(&mut actor, &Pinned(0.9), &ds, &cfg).unwrap();
        assert!(log.iter().map(|l| l.steps).sum::<usize>() <= 500);
        for ex in &ds.examples {
            let p = predict_baseline(&actor, ex, 30).unwrap();
            assert_eq!((p.start, p.end), ex.gold_span, "{}", ex.id);
        }
        let after = mean_ce(&actor, &ds);
        assert!(after < 0.01 * initial, "ce {initial} -> {after}");
    }

    #[test]
    fn critic_overfits_thirty_two_pairs() {
        let ds = fixture(8, 12);
        let gen = GenConfig { replacement_prob: 1.0, ..GenConfig::default() };
        let pairs = build_critic_dataset(&ds, &gen).unwrap();
        assert_eq!(pairs.len(), 32);
        let mut critic = small_critic(critic_vocab(&pairs));
        let cfg = TrainConfig {
            epochs: 15,
            batch_size: 1,
            lr: 0.01,
            holdout_fraction: 0.0,
            ..TrainConfig::default()
        };
        let log = train_critic(&mut critic, &pairs, &cfg).unwrap();
        assert!(log.iter().map(|l| l.steps).sum::<usize>() <= 500);
        assert_eq!(log.last().unwrap().train_acc, Some(1.0));
    }

    #[test]
    fn critic_training_is_deterministic() {
        let ds = fixture(6, 13);
        let pairs = build_critic_dataset(&ds, &GenConfig::default()).unwrap();
        let cfg = TrainConfig { epochs: 2, batch_size: 4, holdout_fraction: 0.3, ..TrainConfig::default() };
        let run = || {
            let mut critic = small_critic(critic_vocab(&pairs));
            let log = train_critic(&mut critic, &pairs, &cfg).unwrap();
            (log_jsonl(&log), critic.params.digest())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn frozen_critic_is_untouched() {
        let ds = fixture(4, 14);
        let pairs = build_critic_dataset(&ds, &GenConfig::default()).unwrap();
        let critic = small_critic(critic_vocab(&pairs));
        let before = critic.params.clone();
        let mut actor = small_actor(&ds);
        let cfg = TrainConfig { epochs: 1, batch_size: 2, ..TrainConfig::default() };
        let initial = actor.params.digest();
        train_actor(&mut actor, &critic, &ds, &cfg).unwrap();
        assert_eq!(critic.params, before);
        assert_ne!(actor.params.digest(), initial);
    }

    #[test]
    fn holdout_split_is_by_question() {
        let ds = fixture(20, 15);
        let pairs = build_critic_dataset(&ds, &GenConfig::default()).unwrap();
        let (train, held) = split_pairs(&pairs, 0.25);
        assert_eq!(train.len() + held.len(), pairs.len());
        assert!(!held.is_empty() && !train.is_empty());
        for p in &held.pairs {
            assert!(train.pairs.iter().all(|t| t.source_qid != p.source_qid));
        }
    }
}
