//! Toolkit for measuring source-target domain mismatch (STDM) between the
//! source- and target-originating halves of parallel corpora, generating
//! synthetic two-domain benchmarks, and running back-translation and
//! self-training pipelines over a pluggable translator.

pub mod augment;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod lsa;
pub mod probe;
pub mod rng;
pub mod sparse;
pub mod stdm;
pub mod synthgen;
pub mod textproc;
pub mod translator;

pub use error::{Error, Result};
