//! IO, file formats, multi-threaded training and the command line on top of
//! [`stylo_core`].

pub mod config;
pub mod corpus_file;
mod error;
pub mod hogwild;
pub mod model_io;
pub mod posts;
pub mod report;
pub mod synth;

pub mod cli;

pub use error::{ErrorKind, StyloError};
pub use stylo_core;

pub type Result<T, E = StyloError> = std::result::Result<T, E>;
