//! Experiment harness for `pdlocal-core`: TOML configs, grid execution,
//! CSV/JSON metrics, problem and topology files, and the lemma suite
//! behind `pdlocal verify`.

pub mod clock;
pub mod config;
pub mod emit;
pub mod error;
pub mod files;
pub mod grid;
pub mod verify;

pub use error::{Error, Result};
