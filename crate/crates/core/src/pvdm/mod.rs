//! Distributed-memory paragraph vectors.
//!
//! Every document (author) owns a vector that is averaged with the input
//! vectors of the surrounding words to predict the centre word. The output
//! layer is trained with negative sampling.

mod kernel;
mod train;
mod window;

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::vocab::{SubsamplePolicy, Vocabulary};
use crate::{seeded_rng, Error, Result};

pub use kernel::{example_loss, forward_hidden, gradients, sgd_step, Gradients, Scratch, CLIP};
pub use train::{infer_vector, train, train_with, EpochProgress, TrainStats, Trainer, WorkerRngs};
pub use window::{extract_examples, for_each_example, TrainingExample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub lr_min: f64,
    /// Subsampling threshold; `0` disables subsampling.
    pub subsample: f64,
    pub min_count: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 10,
            lr0: 0.025,
            lr_min: 0.0001,
            subsample: 1e-3,
            min_count: 5,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.dim < 2 {
            return fail("dim must be >= 2");
        }
        if self.window < 1 {
            return fail("window must be >= 1");
        }
        if self.negatives < 1 {
            return fail("negatives must be >= 1");
        }
        if self.epochs < 1 {
            return fail("epochs must be >= 1");
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return fail("lr0 must be > 0");
        }
        if !(self.lr_min >= 0.0 && self.lr_min < self.lr0) {
            return fail("lr_min must satisfy 0 <= lr_min < lr0");
        }
        if !(self.subsample >= 0.0 && self.subsample.is_finite()) {
            return fail("subsample must be >= 0");
        }
        if self.min_count < 1 {
            return fail("min_count must be >= 1");
        }
        if self.workers < 1 {
            return fail("workers must be >= 1");
        }
        Ok(())
    }

    pub fn subsample_policy(&self) -> SubsamplePolicy {
        SubsamplePolicy::from_threshold(self.subsample)
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Float> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: alloc::vec![T::zero(); rows * cols],
        }
    }
}

impl<T> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }
}

/// The three trainable matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    /// Word input vectors, one row per vocabulary id.
    pub word_in: Matrix<T>,
    /// Word output vectors used by the negative-sampling classifier.
    pub word_out: Matrix<T>,
    /// Document (author) vectors.
    pub docs: Matrix<T>,
}

impl<T: Float> Params<T> {
    pub fn dim(&self) -> usize {
        self.word_in.cols()
    }

    pub fn all_finite(&self) -> bool {
        [&self.word_in, &self.word_out, &self.docs]
            .iter()
            .all(|m| m.as_slice().iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: Params<f32>,
    pub doc_keys: Vec<String>,
    /// Number of posts behind each document, aligned with `doc_keys`.
    pub doc_post_counts: Vec<u32>,
    pub vocab: Vocabulary,
    pub config: TrainConfig,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn doc_index(&self, key: &str) -> Option<usize> {
        self.doc_keys.iter().position(|k| k == key)
    }

    pub fn doc_vector(&self, key: &str) -> Option<&[f32]> {
        self.doc_index(key).map(|i| self.params.docs.row(i))
    }
}

/// Fill `out` uniformly from `[-0.5/D, 0.5/D]`.
pub(crate) fn uniform_init<R: rand::Rng>(out: &mut [f32], dim: usize, rng: &mut R) {
    let half = 0.5 / dim as f32;
    let dist = Uniform::new_inclusive(-half, half);
    for x in out {
        *x = dist.sample(rng);
    }
}

/// Randomly initialized model: word input and document vectors uniform in
/// `[-0.5/D, 0.5/D]`, output vectors zero.
pub fn init_model(vocab: Vocabulary, doc_keys: Vec<String>, doc_post_counts: Vec<u32>, config: TrainConfig) -> Result<Model> {
    config.validate()?;
    if vocab.len() < 2 {
        return Err(Error::InvalidConfig("vocabulary needs at least two words".into()));
    }
    if doc_keys.is_empty() {
        return Err(Error::InvalidConfig("at least one document is required".into()));
    }
    if doc_keys.len() != doc_post_counts.len() {
        return Err(Error::DimensionMismatch {
            expected: doc_keys.len(),
            got: doc_post_counts.len(),
        });
    }
    let dim = config.dim;
    let mut rng = seeded_rng(config.seed, 0);
    let mut word_in = Matrix::zeros(vocab.len(), dim);
    uniform_init(word_in.as_mut_slice(), dim, &mut rng);
    let mut docs = Matrix::zeros(doc_keys.len(), dim);
    uniform_init(docs.as_mut_slice(), dim, &mut rng);
    Ok(Model {
        params: Params {
            word_in,
            word_out: Matrix::zeros(vocab.len(), dim),
            docs,
        },
        doc_keys,
        doc_post_counts,
        vocab,
        config,
    })
}
