//! Switched linear projections for feed-forward ReLU networks.
//!
//! For a fixed input, every neuron of a ReLU network computes an exact
//! affine function of the input, `v = x · ŵ + b̂`, whose weights depend only
//! on which neurons are active. This crate computes those projections and
//! builds on them:
//!
//! - [`projection`]: switched weights and bias, by reverse accumulation and
//!   by an explicit masked matrix chain.
//! - [`icd`]: input component decomposition around the neuron's centre.
//! - [`spa`]: singular pattern analysis of a layer's ICD matrix,
//!   significance orderings and representational power.
//! - [`sanity`]: randomisation sanity checks with Spearman correlation.
//! - [`train`]: a small deterministic SGD trainer for dense relu MLPs.
//!
//! Models and datasets use the SLPM / SLPD formats in [`model`]; analysis
//! outputs use the SLPT tensor container in [`tensor`].

pub mod digits;
pub mod error;
pub mod fixtures;
pub mod forward;
pub mod icd;
pub mod linalg;
pub mod model;
pub mod projection;
pub mod render;
pub mod sanity;
pub mod spa;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use forward::{forward_trace, inactive_fraction, ForwardTrace, LayerTrace};
pub use icd::{centre, icd_vector, IcdResult};
pub use linalg::{compact_svd, spearman, Matrix, Svd};
pub use model::{load_dataset, load_model, save_dataset, save_model, Activation, Dataset, Layer, LayerKind, Model};
pub use projection::{
    layer_switched_projections, switched_projection, switched_projection_chain_oracle, Subset, SwitchedProjection,
};
pub use spa::{
    broad_order, icd_matrix, narrow_order, representational_power, singular_patterns, spa_for_layer, Capacity,
    SignificanceOrder, SpaResult,
};
