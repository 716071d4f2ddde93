//! Proofreading engine for neural-circuit reconstructions.
//!
//! The pipeline turns a labeled volume into per-cell skeletons, anchors
//! synapses on them, groups synapses into sorted clusters, flags likely
//! connectivity errors, and records every correction in an append-only,
//! versioned edit log materialized over the immutable base segmentation.

pub mod detect;
pub mod edit;
pub mod error;
pub mod eval;
pub mod grid;
pub mod kv;
pub mod model;
pub mod pipeline;
pub mod rle;
pub mod service;
pub mod skeleton;
pub mod spatial;
pub mod synapse;
pub mod volume;

pub use error::{Error, Result};
pub use model::*;
