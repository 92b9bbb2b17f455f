//! Finite-difference gradient checks on small instances of the real models.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{actor_graph, critic_graph, init_actor_params, init_critic_params, ActorHyper, CriticHyper};
use crate::ndmath::{grad_check, GradCheckReport, ParamStore, Tensor};
use crate::rng::{seeded, Rng64};
use crate::textio::BOS_ID;
use crate::training::{combined_loss_graph, Objective};

pub const GRAD_CHECK_TOLERANCE: f64 = 1e-3;
pub const GRAD_CHECK_EPS: f64 = 1e-5;
pub const MAX_CHECK_PARAMS: usize = 1000;
const VOCAB: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkCheck {
    pub network: &'static str,
    pub seed: u64,
    pub n_params: usize,
    pub max_rel_error: f64,
    pub worst: Option<String>,
}

/// Replace every value (including the zero-initialised ones) so no gradient
/// is trivially zero.
fn randomize(store: &mut ParamStore<f64>, rng: &mut Rng64) {
    for (_, p) in store.iter_mut() {
        p.value.data_mut().iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
    }
}

fn ids(rng: &mut Rng64, len: usize) -> Vec<usize> {
    (0..len).map(|_| rng.gen_range(3..VOCAB)).collect()
}

fn finish(network: &'static str, seed: u64, store: &ParamStore<f64>, r: GradCheckReport) -> Result<NetworkCheck> {
    if store.num_scalars() > MAX_CHECK_PARAMS {
        return Err(Error::Invariant(format!("{network} check has {} parameters", store.num_scalars())));
    }
    Ok(NetworkCheck {
        network,
        seed,
        n_params: store.num_scalars(),
        max_rel_error: r.max_rel_error,
        worst: r.worst.map(|(n, i)| format!("{n}[{i}]")),
    })
}

/// Full critic forward (embedding, encoder, decoder, attention, dense head)
/// under binary cross entropy.
pub fn check_critic(seed: u64) -> Result<NetworkCheck> {
    let hyper = CriticHyper {
        embed_dim: 4,
        hidden: 4,
        head_widths: vec![8, 4],
        init_scale: 0.1,
    };
    let mut rng = seeded(seed);
    let mut store = init_critic_params::<f64>(&hyper, VOCAB, seed)?;
    randomize(&mut store, &mut rng);
    let mut query = vec![BOS_ID];
    let qlen = rng.gen_range(1..6);
    query.extend(ids(&mut rng, qlen));
    let slen = rng.gen_range(1..4);
    let span = ids(&mut rng, slen);
    let label = rng.gen_bool(0.5);
    let layers = hyper.head_widths.len();
    let r = grad_check(
        |g, s| {
            let p = critic_graph(g, s, layers, &query, &span)?;
            g.binary_cross_entropy(p, label)
        },
        &store,
        GRAD_CHECK_EPS,
    )?;
    finish("critic", seed, &store, r)
}

/// Actor forward under the span cross entropy.
pub fn check_actor(seed: u64) -> Result<NetworkCheck> {
    let hyper = ActorHyper {
        embed_dim: 3,
        hidden: 3,
        init_scale: 0.1,
    };
    let mut rng = seeded(seed ^ 0xac70);
    let mut store = init_actor_params::<f64>(&hyper, VOCAB, seed)?;
    randomize(&mut store, &mut rng);
    let qlen = rng.gen_range(1..5);
    let question = ids(&mut rng, qlen);
    let plen = rng.gen_range(2..8);
    let passage = ids(&mut rng, plen);
    let s = rng.gen_range(0..passage.len());
    let e = rng.gen_range(s..passage.len());
    let r = grad_check(
        |g, st| {
            let (start, end) = actor_graph(g, st, &question, &passage)?;
            Ok(combined_loss_graph(g, start, end, (s, e), 0.5, Objective::SpanOnly, 5.0)?.0)
        },
        &store,
        GRAD_CHECK_EPS,
    )?;
    finish("actor", seed, &store, r)
}

/// Two-layer tanh network with a softmax cross-entropy output.
pub fn check_mlp(seed: u64) -> Result<NetworkCheck> {
    let mut rng = seeded(seed ^ 0x313);
    let mut store = ParamStore::new();
    for (name, shape) in [("w1", [6, 8]), ("b1", [1, 8]), ("w2", [8, 5]), ("b2", [1, 5])] {
        store.insert(name, Tensor::zeros(shape))?;
    }
    randomize(&mut store, &mut rng);
    let x = Tensor::from_fn([3, 6], |_, _| rng.gen_range(-1.0..1.0));
    let targets: Vec<usize> = (0..3).map(|_| rng.gen_range(0..5)).collect();
    let r = grad_check(
        |g, s| {
            let xv = g.constant(x.clone());
            let (w1, b1, w2, b2) = (g.param(s, "w1")?, g.param(s, "b1")?, g.param(s, "w2")?, g.param(s, "b2")?);
            let h = g.matmul(xv, w1)?;
            let h = g.add(h, b1)?;
            let h = g.tanh(h);
            let o = g.matmul(h, w2)?;
            let o = g.add(o, b2)?;
            let mut total = None;
            for (i, &t) in targets.iter().enumerate() {
                let row = g.row(o, i)?;
                let ce = g.cross_entropy(row, t)?;
                total = Some(match total {
                    None => ce,
                    Some(acc) => g.add(acc, ce)?,
                });
            }
            Ok(total.expect("three rows"))
        },
        &store,
        GRAD_CHECK_EPS,
    )?;
    finish("mlp", seed, &store, r)
}

/// Every network at seeds `seed..seed + trials`.
pub fn grad_check_suite(seed: u64, trials: usize) -> Result<Vec<NetworkCheck>> {
    let mut out = Vec::with_capacity(3 * trials);
    for k in 0..trials as u64 {
        let s = seed.wrapping_add(k);
        out.push(check_mlp(s)?);
        out.push(check_actor(s)?);
        out.push(check_critic(s)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_network_passes_at_one_seed() {
        for c in grad_check_suite(42, 1).unwrap() {
            assert!(c.max_rel_error < GRAD_CHECK_TOLERANCE, "{c:?}");
            assert!(c.n_params <= MAX_CHECK_PARAMS);
        }
    }
}
