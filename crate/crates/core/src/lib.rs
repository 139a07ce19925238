#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod baseline;
pub mod catalyst;
pub mod centralized;
pub mod decentralized;
pub mod error;
pub mod linalg;
pub mod local;
pub mod params;
pub mod problems;
pub mod rate;
pub mod record;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
