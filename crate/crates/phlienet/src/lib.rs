//! Parametric forecasting of ODE benchmark systems with hypernetwork-generated
//! dynamics models.
//!
//! A system parameter is mapped through a learned interpolated embedding
//! (RBF-softmax over anchor embeddings) to the full weight vector of a causal
//! dilated temporal CNN that predicts state derivatives; explicit Euler steps
//! turn derivative predictions into autoregressive forecasts. The crate also
//! ships the parameter-agnostic and state-augmented baselines, six benchmark
//! ODE data generators, the training protocol, and the evaluation metrics
//! (NRMSE evolution, time-to-threshold, power-spectrum error).
//!
//! Start from the `examples/` directory for runnable walkthroughs of each
//! capability, or the `phlienet` binary (`generate | train | evaluate |
//! analyze`) for the full pipeline.

pub mod analysis;
pub mod cli;
pub mod diffcore;
pub mod error;
pub mod hypernet;
pub mod lie;
pub mod metrics;
pub mod rng;
pub mod rollout;
pub mod sysgen;
pub mod targets;
pub mod trainer;

pub use error::{Error, Result};
