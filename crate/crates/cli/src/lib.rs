//! File formats, query driver and benchmark harness for `hetlift-core`.
//!
//! * [`problog`]: reader for the ProbLog subset (`.pl`),
//! * [`pfl`]: reader and canonical printer for extended PFL (`.pfl`),
//! * [`engine`]: engine selection, evidence and timeouts,
//! * [`bench`]: the benchmark problems and the CSV sweep.

pub mod bench;
pub mod engine;
pub mod error;
pub mod pfl;
pub mod problog;
pub mod syntax;

pub use error::{Error, Result};
