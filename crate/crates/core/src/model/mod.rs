//! The forward model: parameters, content projection, relation-weighted
//! aggregation, scoring, and checkpoints.

mod checkpoint;
mod forward;
mod params;
mod tensor;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use forward::{
    aggregate, project_content, relation_weights, weighted_neighborhood, ForwardTrace, Kgcn, ReceptiveField,
};
pub use params::{init_parameters, Aggregator, HyperParams, Layer, ParameterSet};
pub use tensor::{axpy, dot, sigmoid, Tensor};
