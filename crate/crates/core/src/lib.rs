//! Author style fingerprints learned with a distributed-memory paragraph
//! vector model (PV-DM) trained by negative sampling.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the pure parts of
//! the pipeline: tokenization and author aggregation, the vocabulary and
//! negative sampler, PV-DM training and inference, exact cosine retrieval,
//! the identification protocols, and spherical k-means. File formats, the
//! multi-threaded trainer and the command line live in the `stylo` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cluster;
pub mod corpus;
mod error;
pub mod eval;
pub mod index;
pub mod pvdm;
pub mod vocab;

pub use error::{Error, Result};

/// Seeded generator used for every random decision in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build the generator for `seed` on an independent `stream`.
pub fn seeded_rng(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
