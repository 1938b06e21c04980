//! Spectral graph convolutional networks with Chebyshev polynomial filters
//! and class activation mapping.
//!
//! The crate trains graph classifiers on subjects that share one node
//! structure (a weighted graph) and differ in their node features, then
//! attributes per-node saliency scores to each prediction and aggregates
//! them into population-level saliency maps.
//!
//! Modules:
//! - [`spectral`]: graphs, normalized/scaled Laplacians, Chebyshev
//!   recursion, partial-correlation network modelling.
//! - [`nn`]: layers with explicit forward and backward passes (Chebyshev
//!   graph convolution, ReLU, inverted dropout, global average pooling,
//!   dense classifier) plus softmax cross-entropy and L2 loss terms.
//! - [`train`]: Adam, balanced mini-batching, stratified repeated
//!   cross-validation, accuracy reporting.
//! - [`saliency`]: class activation maps, per-subject top-k nodes,
//!   population-level aggregation.
//! - [`data`]: dataset schema and IO, model serialization, synthetic
//!   planted-saliency generator.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below pick a concrete precision.

pub mod data;
pub mod error;
pub mod gradcheck;
pub mod nn;
pub mod saliency;
pub mod scalar;
pub mod seeding;
pub mod spectral;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases (the default used by the CLI).
pub type Graph64 = spectral::Graph<f64>;
pub type ScaledLaplacian64 = spectral::ScaledLaplacian<f64>;
pub type Model64 = nn::Model<f64>;
pub type Dataset64 = data::Dataset<f64>;
pub type Subject64 = data::Subject<f64>;

/// Single-precision aliases.
pub type Graph32 = spectral::Graph<f32>;
pub type ScaledLaplacian32 = spectral::ScaledLaplacian<f32>;
pub type Model32 = nn::Model<f32>;
pub type Dataset32 = data::Dataset<f32>;
pub type Subject32 = data::Subject<f32>;
