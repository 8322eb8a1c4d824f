use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("author {0:?} has no posts")]
    EmptyAuthor(String),
    #[error("duplicate document keys: {0:?}")]
    DuplicateKeys(Vec<String>),
    #[error("no word reaches min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus yields no trainable example")]
    DegenerateCorpus,
    #[error("none of the tokens are in the vocabulary")]
    OutOfVocabulary,
    #[error("zero vector{}", match .0 { Some(k) => alloc::format!(" for key {k:?}"), None => String::new() })]
    ZeroVector(Option<String>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("keys without a counterpart half: {0:?}")]
    UnpairedKeys(Vec<String>),
    #[error("no author has documents in two or more years")]
    NoTemporalQueries,
    #[error("k = {k} exceeds the {n} available fingerprints")]
    TooManyClusters { k: usize, n: usize },
    #[error("{0}")]
    Invalid(String),
}
