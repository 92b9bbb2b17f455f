use std::path::Path;

use serde::{Deserialize, Serialize};

use super::attention::luong_attention;
use super::lstm::{init_lstm, lstm_encode};
use super::{check_shapes, SpanCritic};
use crate::error::{Error, Result};
use crate::ndmath::{checkpoint, Graph, ParamStore, Real, Var, PROB_EPS};
use crate::rng::seeded;
use crate::textio::{Vocabulary, BOS_ID};

pub const CRITIC_KIND: &str = "critic";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticHyper {
    pub embed_dim: usize,
    pub hidden: usize,
    /// Widths of the tanh layers before the final sigmoid unit.
    pub head_widths: Vec<usize>,
    pub init_scale: f64,
}

impl Default for CriticHyper {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            hidden: 64,
            head_widths: vec![128, 64],
            init_scale: 0.08,
        }
    }
}

/// Encoder-decoder LSTM with Luong attention and a dense sigmoid head that
/// scores whether a span belongs after the passage text preceding it.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticModel {
    pub hyper: CriticHyper,
    pub vocab: Vocabulary,
    pub params: ParamStore<f32>,
}

/// Parameters for `hyper`: uniform weights, zero biases, zero final layer.
pub fn init_critic_params<T: Real>(hyper: &CriticHyper, vocab_size: usize, seed: u64) -> Result<ParamStore<T>> {
    if hyper.embed_dim == 0 || hyper.hidden == 0 || hyper.head_widths.contains(&0) {
        return Err(Error::Config("critic dimensions must be positive".into()));
    }
    let mut rng = seeded(seed);
    let mut s = ParamStore::new();
    let (d, h, scale) = (hyper.embed_dim, hyper.hidden, hyper.init_scale);
    s.insert_uniform("emb", [vocab_size, d], scale, &mut rng)?;
    init_lstm(&mut s, "enc", d, h, scale, &mut rng)?;
    init_lstm(&mut s, "dec", d, h, scale, &mut rng)?;
    s.insert_uniform("attn.w_a", [h, h], scale, &mut rng)?;
    s.insert_uniform("attn.w_c", [2 * h, h], scale, &mut rng)?;
    let mut width = h;
    for (k, &next) in hyper.head_widths.iter().enumerate() {
        s.insert_uniform(format!("head.w{k}"), [width, next], scale, &mut rng)?;
        s.insert_zeros(format!("head.b{k}"), [1, next])?;
        width = next;
    }
    let last = hyper.head_widths.len();
    s.insert_zeros(format!("head.w{last}"), [width, 1])?;
    s.insert_zeros(format!("head.b{last}"), [1, 1])?;
    Ok(s)
}

/// Graph for `p_genuine` as a `1 x 1` sigmoid output (unclamped).
pub fn critic_graph<'a, T: Real>(
    g: &mut Graph<'a, T>,
    store: &'a ParamStore<T>,
    head_layers: usize,
    query_ids: &[usize],
    span_ids: &[usize],
) -> Result<Var> {
    if span_ids.is_empty() {
        return Err(Error::EmptySequence("critic span"));
    }
    if query_ids.first() != Some(&BOS_ID) {
        return Err(Error::Data("critic query must begin with <bos>".into()));
    }
    let emb = g.param(store, "emb")?;
    let q = g.embedding_lookup(emb, query_ids)?;
    let s = g.embedding_lookup(emb, span_ids)?;
    let enc = lstm_encode(g, store, "enc", q, None)?;
    let dec = lstm_encode(g, store, "dec", s, Some((enc.h, enc.c)))?;
    let w_a = g.param(store, "attn.w_a")?;
    let w_c = g.param(store, "attn.w_c")?;
    let att = luong_attention(g, dec.states, enc.states, w_a, w_c)?;
    let mut x = g.mean(att.states, 0)?;
    for k in 0..=head_layers {
        let w = g.param(store, &format!("head.w{k}"))?;
        let b = g.param(store, &format!("head.b{k}"))?;
        let z = g.matmul(x, w)?;
        let z = g.add(z, b)?;
        x = if k == head_layers { g.sigmoid(z) } else { g.tanh(z) };
    }
    Ok(x)
}

pub fn clamp_prob(p: f32) -> f32 {
    let eps = PROB_EPS as f32;
    p.clamp(eps, 1.0 - eps)
}

impl CriticModel {
    pub fn new(hyper: CriticHyper, vocab: Vocabulary, seed: u64) -> Result<Self> {
        let params = init_critic_params(&hyper, vocab.len(), seed)?;
        Ok(Self { hyper, vocab, params })
    }

    pub fn head_layers(&self) -> usize {
        self.hyper.head_widths.len()
    }

    pub fn forward<'a>(&'a self, g: &mut Graph<'a, f32>, query_ids: &[usize], span_ids: &[usize]) -> Result<Var> {
        critic_graph(g, &self.params, self.head_layers(), query_ids, span_ids)
    }

    pub fn probability_ids(&self, query_ids: &[usize], span_ids: &[usize]) -> Result<f32> {
        let mut g = Graph::new();
        let p = self.forward(&mut g, query_ids, span_ids)?;
        Ok(clamp_prob(g.value(p).item()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let hyper = serde_json::to_value(&self.hyper).expect("hyperparameters serialize");
        checkpoint::save(dir, CRITIC_KIND, hyper, self.vocab.tokens().to_vec(), &self.params)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (manifest, params) = checkpoint::load(dir)?;
        if manifest.model_kind != CRITIC_KIND {
            return Err(Error::Checkpoint(format!(
                "expected a critic checkpoint, found `{}`",
                manifest.model_kind
            )));
        }
        let hyper: CriticHyper = serde_json::from_value(manifest.hyperparameters)
            .map_err(|e| Error::Checkpoint(format!("critic hyperparameters: {e}")))?;
        let vocab = Vocabulary::from_tokens(manifest.vocab)?;
        let reference = init_critic_params::<f32>(&hyper, vocab.len(), 0)?;
        check_shapes(&reference, &params)?;
        Ok(Self { hyper, vocab, params })
    }
}

impl SpanCritic for CriticModel {
    fn p_genuine(&self, query: &[String], span: &[String]) -> Result<f32> {
        self.probability_ids(&self.vocab.encode(query), &self.vocab.encode(span))
    }
}

