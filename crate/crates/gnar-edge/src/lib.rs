//! Network autoregression for multivariate time series observed on the
//! edges of a fixed directed graph.
//!
//! Each labelled edge carries its own series; the model regresses every
//! edge's value on its own lags and on uniformly weighted averages of its
//! r-stage neighbouring edges, with coefficients pooled across the network.
//! The crate bundles the full workflow: graph generators and neighbourhood
//! structure ([`graph`], [`simulate`]), panel preprocessing ([`panel`]),
//! model estimation and forecasting ([`gnar`], [`baselines`]), lead-lag
//! network sparsification ([`leadlag`]), residual diagnostics
//! ([`diagnostics`]) and a seeded experiment harness.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --release -p gnar-edge --example simulate_and_fit
//! cargo run --release -p gnar-edge --example coverage_study
//! cargo run --release -p gnar-edge --example leadlag_sparsify
//! ```
//!
//! or the `gnar-edge` binary, which exposes the same capabilities as
//! subcommands (`graph-gen`, `simulate`, `fit`, `predict`, `evaluate`,
//! `sparsify`, `diagnose`, `experiment`, `regimes`).

pub mod baselines;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod gnar;
pub mod graph;
pub mod io;
pub mod leadlag;
mod linalg;
pub mod panel;
pub mod pipeline;
pub mod simulate;

pub use error::{Error, Result};
