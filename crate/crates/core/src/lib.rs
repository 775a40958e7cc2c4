//! Training-free graph condensation via propagated-feature class-wise clustering.
//!
//! The pipeline compresses a labeled graph into a small set of class-labeled
//! centroid nodes: node features are smoothed by multi-hop propagation over the
//! normalized adjacency, then clustered class-by-class under a balanced
//! sum-of-squares objective; cluster centroids become the condensed node set
//! (with an implicit identity adjacency). When the graph grows in batches, the
//! previous step's centroids warm-start the next clustering round instead of
//! re-seeding from scratch.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`] / [`features`] — CSR graph, labels, splits, batch streams, and
//!   dense row-major feature storage.
//! - [`propagation`] — symmetric normalization and weighted K-hop feature
//!   smoothing.
//! - [`clustering`] — k-means++ and incremental seeding, Lloyd iteration,
//!   fuzzy c-means, and the balanced-SSE selection objective.
//! - [`condense`] / [`evolve`] — the static condensation driver and its
//!   warm-started streaming counterpart.
//! - [`eval`] — closed-form linear evaluation, empirical bound checks, and
//!   coreset baselines.
//! - [`synth`] — stochastic block model generator for desk-scale experiments.
//! - [`io`] / [`config`] / [`report`] — artifact readers/writers, run
//!   configuration echo, and ledger roll-ups.

pub mod clustering;
pub mod condense;
pub mod config;
pub mod error;
pub mod eval;
pub mod evolve;
pub mod features;
pub mod graph;
pub mod io;
pub mod propagation;
pub mod report;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
