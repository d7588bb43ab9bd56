//! Framing-sensitivity evaluation harness and representation-level
//! mitigation engine for transformer decision models.
//!
//! The crate measures how fact-preserving framings flip binary decisions,
//! diagnoses the internal shift with a layer-wise logit lens, and suppresses
//! it with a prefill-time intervention combining a value-anchor prompt,
//! value steering, and temporal-vividness subspace projection.

pub mod artifact;
pub mod assets;
pub mod corpus;
pub mod elicit;
pub mod error;
pub mod lens;
pub mod layersel;
pub mod metrics;
pub mod modelio;
pub mod numerics;
pub mod qc;
pub mod report;
pub mod run;
pub mod valign;

pub use error::{Error, Result};
