//! Subgroup discovery and within-subgroup risk modelling for mixed-type
//! tabular data: k-prototypes clustering with automatic k selection,
//! multivariate cluster-separation tests, per-cluster logistic significance
//! tables, and classifier benchmarking under repeated splits.

pub mod data;
pub mod ingest;
pub mod kproto;
pub mod mvtest;
pub mod pipeline;
pub mod seeding;
pub mod selection;
pub mod supervised;
pub mod synth;

pub use data::{Dataset, DesignMatrix, Schema};
pub use kproto::{ClusterModel, Gamma, KProtoParams};
pub use selection::{IndexTrace, SelectionParams};
