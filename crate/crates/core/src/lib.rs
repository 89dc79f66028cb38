//! Secure adaptive group testing: codebook construction, MDS key expansion,
//! the OR/erasure channel, exhaustive decoding, leakage auditing and
//! test-count bounds.

pub mod bits;
pub mod bounds;
pub mod channel;
pub mod cli;
pub mod codebook;
pub mod decoder;
pub mod error;
pub mod gf;
pub mod mds;
pub mod protocol;
pub mod rng;
pub mod secrecy;
pub mod subset;

pub use error::{Error, Result};
