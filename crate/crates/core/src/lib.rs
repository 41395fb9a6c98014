//! Phase detection for multi-phase processes from per-second sensor signals.
//!
//! Three classifiers are provided: a random forest frame classifier
//! ([`forest`]), a left-to-right HMM over raw signals ([`markov`]), and the
//! combined pipeline in which forest outputs become HMM observations whose
//! emission table is the forest's held-out confusion matrix ([`pipeline`]).
//! [`eval`] runs leave-one-surgery-out cross-validation, [`synth`] generates
//! seeded recordings, and [`cli`] exposes everything as a batch tool.
//!
//! The numeric kernels are generic over [`Scalar`]; the aliases below fix the
//! scalar to `f64` (the pipeline default) or `f32`.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod eval;
pub mod forest;
pub mod kv;
pub mod markov;
pub mod pipeline;
pub mod scalar;
mod seed;
pub mod signals;
pub mod synth;
pub mod timeline;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TransitionModel = markov::TransitionModel<f64>;
pub type DiscreteEmissionTable = markov::DiscreteEmissionTable<f64>;
pub type EmissionScores = markov::EmissionScores<f64>;
pub type SignalEmissionModel = markov::SignalEmissionModel<f64>;
pub type HmmModel = markov::HmmModel<f64>;
pub type ForwardResult = markov::ForwardResult<f64>;
pub type BaumWelchResult = markov::BaumWelchResult<f64>;

pub type TransitionModel32 = markov::TransitionModel<f32>;
pub type DiscreteEmissionTable32 = markov::DiscreteEmissionTable<f32>;
pub type EmissionScores32 = markov::EmissionScores<f32>;
pub type SignalEmissionModel32 = markov::SignalEmissionModel<f32>;
pub type HmmModel32 = markov::HmmModel<f32>;
