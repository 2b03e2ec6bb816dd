//! Edge-based graph transformer toolkit for anti-cancer drug-pair synergy
//! classification.
//!
//! The crate is organized as a pipeline: SMILES strings are parsed into
//! molecules ([`smiles`]), molecules are featurized into node/edge matrices
//! and dual graphs ([`molgraph`]), a graph-convolution plus transformer
//! model scores drug pairs against cell-line expression profiles
//! ([`model`]), and the training/evaluation loop with cross-validation
//! protocols lives in [`pipeline`]. Classification quality is summarized by
//! [`metrics`]. All numeric work runs on the hand-rolled reverse-mode
//! autodiff in [`tensor`], single threaded and deterministic for a fixed
//! seed.

pub mod metrics;
pub mod model;
pub mod molgraph;
pub mod pipeline;
pub mod smiles;
pub mod tensor;
