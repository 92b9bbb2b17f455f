//! The span-predicting actor and the span-genuineness critic.

mod actor;
mod attention;
mod critic;
mod lstm;

pub use actor::{actor_graph, init_actor_params, ActorHyper, ActorModel, ACTOR_KIND};
pub use attention::{luong_attention, Attended};
pub use critic::{clamp_prob, critic_graph, init_critic_params, CriticHyper, CriticModel, CRITIC_KIND};
pub use lstm::{bilstm_encode, init_lstm, lstm_encode, LstmOutput};

use crate::error::{Error, Result};
use crate::ndmath::ParamStore;

/// Per-position start and end logits over a passage.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorOutput {
    pub start_logits: Vec<f32>,
    pub end_logits: Vec<f32>,
}

/// Anything that scores passage positions as answer starts and ends.
pub trait SpanProposer: Sync {
    fn propose(&self, question: &[String], passage: &[String]) -> Result<ActorOutput>;
}

/// Anything that scores how genuinely a span follows its preceding text.
pub trait SpanCritic: Sync {
    fn p_genuine(&self, query: &[String], span: &[String]) -> Result<f32>;
}

fn check_shapes(reference: &ParamStore<f32>, loaded: &ParamStore<f32>) -> Result<()> {
    let want: Vec<_> = reference.iter().map(|(n, p)| (n, p.value.shape())).collect();
    let got: Vec<_> = loaded.iter().map(|(n, p)| (n, p.value.shape())).collect();
    if want != got {
        return Err(Error::Checkpoint(format!(
            "parameter layout mismatch: expected {want:?}, found {got:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
