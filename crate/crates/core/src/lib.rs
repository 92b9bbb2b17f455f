//! Critic-gated extractive question answering.
//!
//! A span-prediction actor proposes answers; a sequence-pair critic, trained
//! on golden spans versus spans corrupted with question words, scores each
//! proposal against the passage text preceding it. Low-scoring proposals are
//! rejected and the actor's next-best span is taken instead.

#![allow(clippy::needless_range_loop)]

pub mod advgen;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod fsutil;
pub mod inference;
pub mod models;
pub mod ndmath;
pub mod rng;
pub mod synth;
pub mod textio;
pub mod training;

pub use error::{Error, Result};
