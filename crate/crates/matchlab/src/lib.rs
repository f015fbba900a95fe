//! Configurable neural subgraph matching.
//!
//! The crate factors subgraph-matching models along five design axes —
//! relevance distance, interaction stage, interaction structure, interaction
//! non-linearity, and granularity — and provides everything needed to train
//! and evaluate any point in that space: graph ingestion and sampling with
//! exact subgraph-isomorphism ground truth, a small reverse-mode autodiff
//! engine, cross-graph alignment (attention and Sinkhorn), GNN encoders,
//! four relevance-distance heads plus exact combinatorial oracles, and a
//! margin-rank trainer with mean-average-precision evaluation.

pub mod config;
pub mod dataset;
pub mod distance;
pub mod encoder;
pub mod error;
pub mod exact;
pub mod graph;
pub mod interaction;
pub mod isomorphism;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod params;
pub mod tape;
pub mod trainer;
pub mod tudataset;

pub use error::{MatchError, Result};
