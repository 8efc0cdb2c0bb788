//! Vertical split learning for bank-loan prediction over a simulated
//! exchange fabric.
//!
//! Two data nodes hold disjoint feature columns of the same samples. Each
//! trains a local feed-forward network against the shared label and ships
//! its third-hidden-layer representations to a host — sealed to the
//! host's key, stored in a content-addressed blob store, with the content
//! hash registered on an append-only ledger. The host joins the
//! representations on sample ID and trains the aggregate model; inference
//! round-trips test columns out to the nodes and their representations
//! back.
//!
//! Module map:
//!
//! - [`dataset`] — CSV ingestion, feature engineering, 7:3 split,
//!   vertical partitioning, standardization, synthetic generator
//! - [`nn`] — from-scratch FFNN: forward, backprop, Adam, extraction
//! - [`store`] — content-addressed blob store (SHA-256)
//! - [`ledger`] — append-only hash registry with a replayable journal
//! - [`envelope`] — sealed-envelope encryption (X25519 + ChaCha20-Poly1305)
//! - [`payload`] — deterministic CSV exchange formats
//! - [`protocol`] — the aggregation mechanism itself
//! - [`metrics`] — classification reports and training curves
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the default `f64` precision used by the CLI and the oracle
//! tests.

pub mod dataset;
pub mod envelope;
pub mod ledger;
pub mod metrics;
pub mod nn;
pub mod payload;
pub mod protocol;
pub mod rng;
pub mod scalar;
pub mod store;

pub use scalar::Scalar;

/// Default scalar type of the shipped pipeline.
pub type Real = f64;

/// [`dataset::FeatureTable`] at default precision.
pub type FeatureTable = dataset::FeatureTable<Real>;
/// [`dataset::Scaler`] at default precision.
pub type Scaler = dataset::Scaler<Real>;
/// [`nn::FfnnModel`] at default precision.
pub type FfnnModel = nn::FfnnModel<Real>;
/// [`nn::TrainConfig`] at default precision.
pub type TrainConfig = nn::TrainConfig<Real>;
/// [`nn::TrainHistory`] at default precision.
pub type TrainHistory = nn::TrainHistory<Real>;
/// [`payload::RepresentationFile`] at default precision.
pub type RepresentationFile = payload::RepresentationFile<Real>;
/// [`metrics::ClassificationReport`] at default precision.
pub type ClassificationReport = metrics::ClassificationReport<Real>;
/// [`protocol::PipelineConfig`] at default precision.
pub type PipelineConfig = protocol::PipelineConfig<Real>;
