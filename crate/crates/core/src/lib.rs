//! Building blocks for bias-conditioned instruction tuning and serving.
//!
//! The crate covers the whole offline pipeline: the bias [`registry`],
//! streaming [`ingest`] of forum dumps, [`corpus`] derivation, bias-specific
//! [`prompt`] rendering, pluggable generation [`backend`]s, and the
//! attitude evaluation harness in [`eval`].

pub mod backend;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod prompt;
pub mod registry;

pub use error::ValidationError;
pub use registry::{Bias, BiasCategory, BiasSource};
