//! Reverse-mode differentiation over dense rank-2 tensors, Adam, and the
//! checkpoint format.

pub mod checkpoint;
mod gradcheck;
mod graph;
mod optim;
mod params;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use graph::{binary_cross_entropy, cross_entropy, Gradients, Graph, Var, PROB_EPS};
pub use optim::{AdamConfig, OptimizerState};
pub use params::{Param, ParamStore};
pub use tensor::{Real, Tensor};
