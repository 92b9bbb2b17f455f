use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lstm::{bilstm_encode, init_lstm};
use super::{check_shapes, ActorOutput, SpanProposer};
use crate::error::{Error, Result};
use crate::ndmath::{checkpoint, Graph, ParamStore, Real, Var};
use crate::rng::seeded;
use crate::textio::Vocabulary;

pub const ACTOR_KIND: &str = "actor";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActorHyper {
    pub embed_dim: usize,
    pub hidden: usize,
    pub init_scale: f64,
}

impl Default for ActorHyper {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            hidden: 64,
            init_scale: 0.08,
        }
    }
}

/// Bidirectional-LSTM span predictor. The mean-pooled question encoding `q`
/// meets each passage position `p_i` through two bilinear heads:
/// `start_i = p_i W_s q + b_s` and `end_i = p_i W_e q + b_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorModel {
    pub hyper: ActorHyper,
    pub vocab: Vocabulary,
    pub params: ParamStore<f32>,
}

pub fn init_actor_params<T: Real>(hyper: &ActorHyper, vocab_size: usize, seed: u64) -> Result<ParamStore<T>> {
    if hyper.embed_dim == 0 || hyper.hidden == 0 {
        return Err(Error::Config("actor dimensions must be positive".into()));
    }
    let mut rng = seeded(seed);
    let mut s = ParamStore::new();
    let (d, h, scale) = (hyper.embed_dim, hyper.hidden, hyper.init_scale);
    s.insert_uniform("emb", [vocab_size, d], scale, &mut rng)?;
    for enc in ["question", "passage"] {
        init_lstm(&mut s, &format!("{enc}.fwd"), d, h, scale, &mut rng)?;
        init_lstm(&mut s, &format!("{enc}.bwd"), d, h, scale, &mut rng)?;
    }
    s.insert_uniform("start.w", [2 * h, 2 * h], scale, &mut rng)?;
    s.insert_zeros("start.b", [1, 1])?;
    s.insert_uniform("end.w", [2 * h, 2 * h], scale, &mut rng)?;
    s.insert_zeros("end.b", [1, 1])?;
    Ok(s)
}

/// `(start_logits, end_logits)`, each `1 x passage_len`.
pub fn actor_graph<'a, T: Real>(
    g: &mut Graph<'a, T>,
    store: &'a ParamStore<T>,
    question_ids: &[usize],
    passage_ids: &[usize],
) -> Result<(Var, Var)> {
    if question_ids.is_empty() || passage_ids.is_empty() {
        return Err(Error::EmptySequence("actor input"));
    }
    let emb = g.param(store, "emb")?;
    let qx = g.embedding_lookup(emb, question_ids)?;
    let px = g.embedding_lookup(emb, passage_ids)?;
    let q_states = bilstm_encode(g, store, "question", qx)?;
    let q = g.mean(q_states, 0)?;
    let q_col = g.transpose(q);
    let p_states = bilstm_encode(g, store, "passage", px)?;

    let head = |g: &mut Graph<'a, T>, name: &str| -> Result<Var> {
        let w = g.param(store, &format!("{name}.w"))?;
        let b = g.param(store, &format!("{name}.b"))?;
        let pw = g.matmul(p_states, w)?;
        let col = g.matmul(pw, q_col)?;
        let col = g.add(col, b)?;
        Ok(g.transpose(col))
    };
    let start = head(g, "start")?;
    let end = head(g, "end")?;
    Ok((start, end))
}

impl ActorModel {
    pub fn new(hyper: ActorHyper, vocab: Vocabulary, seed: u64) -> Result<Self> {
        let params = init_actor_params(&hyper, vocab.len(), seed)?;
        Ok(Self { hyper, vocab, params })
    }

    pub fn forward<'a>(
        &'a self,
        g: &mut Graph<'a, f32>,
        question_ids: &[usize],
        passage_ids: &[usize],
    ) -> Result<(Var, Var)> {
        actor_graph(g, &self.params, question_ids, passage_ids)
    }

    pub fn logits_ids(&self, question_ids: &[usize], passage_ids: &[usize]) -> Result<ActorOutput> {
        let mut g = Graph::new();
        let (s, e) = self.forward(&mut g, question_ids, passage_ids)?;
        Ok(ActorOutput {
            start_logits: g.value(s).data().to_vec(),
            end_logits: g.value(e).data().to_vec(),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let hyper = serde_json::to_value(&self.hyper).expect("hyperparameters serialize");
        checkpoint::save(dir, ACTOR_KIND, hyper, self.vocab.tokens().to_vec(), &self.params)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (manifest, params) = checkpoint::load(dir)?;
        if manifest.model_kind != ACTOR_KIND {
            return Err(Error::Checkpoint(format!(
                "expected an actor checkpoint, found `{}`",
                manifest.model_kind
            )));
        }
        let hyper: ActorHyper = serde_json::from_value(manifest.hyperparameters)
            .map_err(|e| Error::Checkpoint(format!("actor hyperparameters: {e}")))?;
        let vocab = Vocabulary::from_tokens(manifest.vocab)?;
        let reference = init_actor_params::<f32>(&hyper, vocab.len(), 0)?;
        check_shapes(&reference, &params)?;
        Ok(Self { hyper, vocab, params })
    }
}

impl SpanProposer for ActorModel {
    fn propose(&self, question: &[String], passage: &[String]) -> Result<ActorOutput> {
        self.logits_ids(&self.vocab.encode(question), &self.vocab.encode(passage))
    }
}
