//! Knowledge-graph convolutional recommender trained with a joint
//! collaborative + content-based contrastive objective.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`data`]: interactions, knowledge graph, external content embeddings,
//!   id maps, splitting and sampling.
//! - [`pairs`]: metadata verbalization and positive/negative pair mining.
//! - [`model`]: parameters, the relation-weighted aggregation forward pass
//!   (with its hand-written backward pass) and checkpoints.
//! - [`train`]: losses, gradients, Adam and the epoch loop.
//! - [`eval`]: CTR, top-K, diversity, embedding geometry, cold-start
//!   stratification and Welch's t-test.
//! - [`synthetic`]: planted-structure datasets used for smoke runs and tests.

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod pairs;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
