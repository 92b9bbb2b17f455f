use rand::Rng;

use crate::error::{Error, Result};
use crate::ndmath::{Graph, ParamStore, Real, Var};

/// Registers `{prefix}.w_x` (in x 4h), `{prefix}.w_h` (h x 4h) and a zero
/// bias `{prefix}.b` (1 x 4h). Gate column blocks are input, forget,
/// candidate, output.
pub fn init_lstm<T: Real>(
    store: &mut ParamStore<T>,
    prefix: &str,
    input: usize,
    hidden: usize,
    scale: f64,
    rng: &mut impl Rng,
) -> Result<()> {
    store.insert_uniform(format!("{prefix}.w_x"), [input, 4 * hidden], scale, rng)?;
    store.insert_uniform(format!("{prefix}.w_h"), [hidden, 4 * hidden], scale, rng)?;
    store.insert_zeros(format!("{prefix}.b"), [1, 4 * hidden])
}

pub struct LstmOutput {
    /// Hidden state per step, `steps x h`.
    pub states: Var,
    pub h: Var,
    pub c: Var,
}

/// Unidirectional LSTM over the rows of `inputs` (`steps x in`).
pub fn lstm_encode<'a, T: Real>(
    g: &mut Graph<'a, T>,
    store: &'a ParamStore<T>,
    prefix: &str,
    inputs: Var,
    init: Option<(Var, Var)>,
) -> Result<LstmOutput> {
    let steps = g.shape(inputs)[0];
    if steps == 0 {
        return Err(Error::EmptySequence("lstm_encode"));
    }
    let w_x = g.param(store, &format!("{prefix}.w_x"))?;
    let w_h = g.param(store, &format!("{prefix}.w_h"))?;
    let b = g.param(store, &format!("{prefix}.b"))?;
    let hidden = g.shape(w_h)[0];

    // input projections for all steps at once
    let xw = g.matmul(inputs, w_x)?;
    let xw = g.add(xw, b)?;

    let (mut h, mut c) = match init {
        Some(state) => state,
        None => (
            g.constant(crate::ndmath::Tensor::zeros([1, hidden])),
            g.constant(crate::ndmath::Tensor::zeros([1, hidden])),
        ),
    };
    let mut states = Vec::with_capacity(steps);
    for t in 0..steps {
        let x_t = g.row(xw, t)?;
        let hw = g.matmul(h, w_h)?;
        let z = g.add(x_t, hw)?;
        let i = g.slice_cols(z, 0, hidden)?;
        let f = g.slice_cols(z, hidden, hidden)?;
        let cand = g.slice_cols(z, 2 * hidden, hidden)?;
        let o = g.slice_cols(z, 3 * hidden, hidden)?;
        let i = g.sigmoid(i);
        let f = g.sigmoid(f);
        let cand = g.tanh(cand);
        let o = g.sigmoid(o);
        let keep = g.mul(f, c)?;
        let write = g.mul(i, cand)?;
        c = g.add(keep, write)?;
        let tc = g.tanh(c);
        h = g.mul(o, tc)?;
        states.push(h);
    }
    let states = if steps == 1 { states[0] } else { g.concat(&states, 0)? };
    Ok(LstmOutput { states, h, c })
}

/// Forward and backward LSTMs (`{prefix}.fwd`, `{prefix}.bwd`); per-step
/// outputs are concatenated to `steps x 2h`.
pub fn bilstm_encode<'a, T: Real>(
    g: &mut Graph<'a, T>,
    store: &'a ParamStore<T>,
    prefix: &str,
    inputs: Var,
) -> Result<Var> {
    let steps = g.shape(inputs)[0];
    let fwd = lstm_encode(g, store, &format!("{prefix}.fwd"), inputs, None)?;
    let rev: Vec<usize> = (0..steps).rev().collect();
    let reversed = g.gather_rows(inputs, &rev)?;
    let bwd = lstm_encode(g, store, &format!("{prefix}.bwd"), reversed, None)?;
    let bwd_states = g.gather_rows(bwd.states, &rev)?;
    g.concat(&[fwd.states, bwd_states], 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Tensor;
    use crate::rng::seeded;

    #[test]
    fn zero_weights_give_zero_state() {
        let mut store = ParamStore::<f32>::new();
        init_lstm(&mut store, "l", 3, 2, 0.0001, &mut seeded(0)).unwrap();
        for (_, p) in store.iter_mut() {
            p.value.data_mut().iter_mut().for_each(|x| *x = 0.0);
        }
        let mut g = Graph::new();
        let x = g.constant(Tensor::full([4, 3], 1.0));
        let out = lstm_encode(&mut g, &store, "l", x, None).unwrap();
        assert!(g.value(out.states).data().iter().all(|&v| v == 0.0));
        assert!(g.value(out.c).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_state_is_final_state() {
        let mut store = ParamStore::<f32>::new();
        init_lstm(&mut store, "l", 3, 4, 0.5, &mut seeded(1)).unwrap();
        let mut g = Graph::new();
        let x = g.constant(Tensor::row(vec![0.3, -0.2, 0.9]));
        let out = lstm_encode(&mut g, &store, "l", x, None).unwrap();
        assert_eq!(g.shape(out.states), [1, 4]);
        assert_eq!(g.value(out.states), g.value(out.h));
    }

    #[test]
    fn one_step_matches_hand_recurrence() {
        let mut store = ParamStore::<f64>::new();
        init_lstm(&mut store, "l", 1, 1, 0.9, &mut seeded(2)).unwrap();
        let wx = store.get("l.w_x").unwrap().data().to_vec();
        let wh = store.get("l.w_h").unwrap().data().to_vec();
        let x = 0.7;
        let (h0, c0) = (0.2, -0.4);
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z: Vec<f64> = (0..4).map(|k| x * wx[k] + h0 * wh[k]).collect();
        let c1 = sig(z[1]) * c0 + sig(z[0]) * z[2].tanh();
        let h1 = sig(z[3]) * c1.tanh();

        let mut g = Graph::new();
        let xv = g.constant(Tensor::scalar(x));
        let hv = g.constant(Tensor::scalar(h0));
        let cv = g.constant(Tensor::scalar(c0));
        let out = lstm_encode(&mut g, &store, "l", xv, Some((hv, cv))).unwrap();
        assert!((g.value(out.h).item() - h1).abs() < 1e-12);
        assert!((g.value(out.c).item() - c1).abs() < 1e-12);
    }

    #[test]
    fn backward_direction_is_forward_on_reversed_input() {
        let mut store = ParamStore::<f32>::new();
        init_lstm(&mut store, "b.fwd", 2, 3, 0.5, &mut seeded(3)).unwrap();
        init_lstm(&mut store, "b.bwd", 2, 3, 0.5, &mut seeded(4)).unwrap();
        let xs = Tensor::new([3, 2], vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6]).unwrap();
        let rev = Tensor::new([3, 2], vec![0.5, -0.6, -0.3, 0.4, 0.1, 0.2]).unwrap();

        let mut g = Graph::new();
        let x = g.constant(xs);
        let bi = bilstm_encode(&mut g, &store, "b", x).unwrap();
        let r = g.constant(rev);
        let direct = lstm_encode(&mut g, &store, "b.bwd", r, None).unwrap();
        let bi_v = g.value(bi).clone();
        let d_v = g.value(direct.states).clone();
        for t in 0..3 {
            for k in 0..3 {
                assert_eq!(bi_v.get(t, 3 + k), d_v.get(2 - t, k));
            }
        }
    }

    #[test]
    fn empty_sequence_rejected() {
        let mut store = ParamStore::<f32>::new();
        init_lstm(&mut store, "l", 2, 2, 0.1, &mut seeded(0)).unwrap();
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros([0, 2]));
        assert!(lstm_encode(&mut g, &store, "l", x, None).is_err());
    }
}
