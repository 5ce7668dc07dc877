//! Siamese extreme learning machines for pairwise identity verification.
//!
//! The crate covers closed-form ELM/WELM/SELM training, a small triplet
//! embedder with cohort-scoped registries, a routed verification pipeline,
//! evaluation statistics and the text/JSON file formats used by the CLI.

pub mod bench;
pub mod data;
pub mod elm;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod pipeline;
pub mod rng;
pub mod selm;
pub mod solver;
pub mod triplet;
pub mod tuning;
pub mod types;
pub mod welm;

pub use error::{Error, Result};
