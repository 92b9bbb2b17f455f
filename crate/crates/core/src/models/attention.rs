use crate::error::{Error, Result};
use crate::ndmath::{Graph, Real, Var};

pub struct Attended {
    /// `tanh([context ; decoder] W_c)`, one row per decoder step.
    pub states: Var,
    /// Attention weights, `decoder steps x encoder steps`.
    pub weights: Var,
}

/// Luong "general" attention: `score(t, s) = d_t W_a e_s`, softmax over `s`.
pub fn luong_attention<T: Real>(
    g: &mut Graph<'_, T>,
    decoder: Var,
    encoder: Var,
    w_a: Var,
    w_c: Var,
) -> Result<Attended> {
    let (sd, se) = (g.shape(decoder), g.shape(encoder));
    if sd[0] == 0 || se[0] == 0 {
        return Err(Error::EmptySequence("luong_attention"));
    }
    if sd[1] != se[1] {
        return Err(Error::Shape {
            op: "luong_attention",
            lhs: sd,
            rhs: se,
        });
    }
    let dw = g.matmul(decoder, w_a)?;
    let enc_t = g.transpose(encoder);
    let scores = g.matmul(dw, enc_t)?;
    let weights = g.softmax(scores, 1)?;
    let context = g.matmul(weights, encoder)?;
    let joined = g.concat(&[context, decoder], 1)?;
    let combined = g.matmul(joined, w_c)?;
    Ok(Attended {
        states: g.tanh(combined),
        weights,
    })
}
