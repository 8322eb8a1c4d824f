use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::Ordering;

// Targets without 64-bit atomics count in pointer-sized words.
#[cfg(target_has_atomic = "64")]
type Counter = core::sync::atomic::AtomicU64;
#[cfg(not(target_has_atomic = "64"))]
type Counter = core::sync::atomic::AtomicUsize;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kernel::{axpy, dot, score_coefficient, sgd_step, Scratch};
use super::window::for_each_example;
use super::{init_model, uniform_init, Model, Params, TrainConfig};
use crate::corpus::AuthorDocument;
use crate::vocab::{keep_probability, NegativeSamplingTable, Vocabulary};
use crate::{seeded_rng, Error, Result, Rng};

/// Loss accumulated over part of an epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochProgress {
    pub loss_sum: f64,
    pub examples: u64,
    /// Loss of the very first example in this shard, before its update.
    pub first_loss: Option<f64>,
}

impl EpochProgress {
    pub fn merge(&mut self, other: EpochProgress) {
        self.loss_sum += other.loss_sum;
        self.examples += other.examples;
        if self.first_loss.is_none() {
            self.first_loss = other.first_loss;
        }
    }

    pub fn mean_loss(&self) -> f64 {
        if self.examples == 0 {
            0.0
        } else {
            self.loss_sum / self.examples as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub epoch_mean_loss: Vec<f64>,
    pub epoch_examples: Vec<u64>,
    /// Loss of the first example seen, before any update.
    pub first_loss: Option<f64>,
}

/// Read-only training state shared by all workers: encoded documents,
/// keep probabilities and the negative sampler.
#[derive(Debug)]
pub struct Trainer {
    config: TrainConfig,
    table: NegativeSamplingTable,
    keep: Vec<f64>,
    docs: Vec<Vec<u32>>,
    total_planned: u64,
    processed: Counter,
}

impl Trainer {
    pub fn new(vocab: &Vocabulary, documents: &[AuthorDocument], config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let docs: Vec<Vec<u32>> = documents.iter().map(|d| vocab.encode(&d.tokens)).collect();
        if !docs.iter().any(|d| d.len() >= 2) || vocab.len() < 2 {
            return Err(Error::DegenerateCorpus);
        }
        let policy = config.subsample_policy();
        let keep = (0..vocab.len() as u32).map(|id| keep_probability(id, vocab, policy)).collect();
        let tokens: u64 = docs.iter().map(|d| d.len() as u64).sum();
        Ok(Trainer {
            config,
            table: NegativeSamplingTable::new(vocab),
            keep,
            docs,
            total_planned: tokens * config.epochs as u64,
            processed: Counter::new(0),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    /// Generators owned by worker `worker` for the whole run.
    pub fn worker_rngs(&self, worker: usize) -> WorkerRngs {
        let stream = 2 + 2 * worker as u64;
        WorkerRngs {
            window: seeded_rng(self.config.seed, stream),
            negatives: seeded_rng(self.config.seed, stream + 1),
        }
    }

    /// Generator for the per-epoch document shuffle.
    pub fn shuffle_rng(&self) -> Rng {
        seeded_rng(self.config.seed, 1)
    }

    pub fn epoch_order(&self, rng: &mut Rng) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.docs.len()).collect();
        order.shuffle(rng);
        order
    }

    /// Linear decay from `lr0` to `lr_min` over all planned tokens.
    pub fn learning_rate(&self, processed: u64) -> f64 {
        let c = &self.config;
        let frac = processed as f64 / self.total_planned.max(1) as f64;
        (c.lr0 * (1.0 - frac)).max(c.lr_min)
    }

    /// Train on the documents listed in `shard`, in order.
    ///
    /// Several workers may call this concurrently on aliased parameters
    /// (hogwild); the shared token counter is the only synchronized state.
    pub fn train_shard(&self, params: &mut Params<f32>, shard: &[usize], rngs: &mut WorkerRngs) -> EpochProgress {
        let dim = params.dim();
        let mut scratch = Scratch::new(dim);
        let mut kept = Vec::new();
        let mut context = Vec::with_capacity(2 * self.config.window);
        let mut negatives = alloc::vec![0u32; self.config.negatives];
        let mut progress = EpochProgress::default();

        for &doc in shard {
            let ids = &self.docs[doc];
            #[allow(clippy::unnecessary_cast)] // usize on targets without 64-bit atomics
            let base = self.processed.load(Ordering::Relaxed) as u64;
            let mut offset = 0u64;
            let WorkerRngs { window, negatives: sampler } = rngs;
            for_each_example(ids, &self.keep, self.config.window, window, &mut kept, |target, left, right| {
                context.clear();
                context.extend_from_slice(left);
                context.extend_from_slice(right);
                self.table.sample_into(&mut negatives, target, sampler);
                let lr = self.learning_rate(base + offset) as f32;
                let loss = sgd_step(params, doc, target, &context, &negatives, lr, &mut scratch);
                if progress.first_loss.is_none() {
                    progress.first_loss = Some(loss);
                }
                progress.loss_sum += loss;
                progress.examples += 1;
                offset += 1;
            });
            self.processed.fetch_add(ids.len() as _, Ordering::Relaxed);
        }
        progress
    }
}

/// Per-worker generators: one drives subsampling and window radii, the
/// other the negative draws.
#[derive(Debug, Clone)]
pub struct WorkerRngs {
    pub window: Rng,
    pub negatives: Rng,
}

/// Train with a caller-supplied epoch runner. `run_epoch` receives the
/// shuffled document order of one epoch and must train on all of it.
pub fn train_with<F>(documents: &[AuthorDocument], config: TrainConfig, mut run_epoch: F) -> Result<(Model, TrainStats)>
where
    F: FnMut(&Trainer, &mut Params<f32>, &[usize]) -> EpochProgress,
{
    config.validate()?;
    let vocab = Vocabulary::build(documents, config.min_count).map_err(|e| match e {
        Error::EmptyVocabulary { .. } => Error::DegenerateCorpus,
        other => other,
    })?;
    let keys: Vec<String> = documents.iter().map(|d| d.key.clone()).collect();
    let counts = documents.iter().map(|d| d.post_count).collect();
    crate::corpus::ensure_unique_keys(documents)?;
    let trainer = Trainer::new(&vocab, documents, config)?;
    let mut model = init_model(vocab, keys, counts, config)?;

    let mut shuffle = trainer.shuffle_rng();
    let mut stats = TrainStats::default();
    for _ in 0..config.epochs {
        let order = trainer.epoch_order(&mut shuffle);
        let progress = run_epoch(&trainer, &mut model.params, &order);
        if stats.first_loss.is_none() {
            stats.first_loss = progress.first_loss;
        }
        stats.epoch_mean_loss.push(progress.mean_loss());
        stats.epoch_examples.push(progress.examples);
    }
    if !model.params.all_finite() {
        return Err(Error::Invalid("training diverged to non-finite values".into()));
    }
    Ok((model, stats))
}

/// Single-threaded training. `config.workers` is ignored here; the `stylo`
/// crate provides the multi-threaded runner.
pub fn train(documents: &[AuthorDocument], config: TrainConfig) -> Result<(Model, TrainStats)> {
    let mut rngs = None;
    train_with(documents, config, |trainer, params, order| {
        let rngs = rngs.get_or_insert_with(|| trainer.worker_rngs(0));
        trainer.train_shard(params, order, rngs)
    })
}

/// Learn a vector for unseen `tokens` with every word matrix frozen.
///
/// The fresh vector starts uniform in `[-0.5/D, 0.5/D]` and is trained for
/// `steps` passes, the learning rate decaying linearly from `lr0` to the
/// model's `lr_min`.
pub fn infer_vector(tokens: &[String], model: &Model, steps: usize, lr0: f64, seed: u64) -> Result<Vec<f32>> {
    let vocab = &model.vocab;
    let ids = vocab.encode(tokens);
    if ids.is_empty() {
        return Err(Error::OutOfVocabulary);
    }
    let config = &model.config;
    let dim = model.dim();
    let mut rng = seeded_rng(seed, 0);
    let mut doc = alloc::vec![0f32; dim];
    uniform_init(&mut doc, dim, &mut rng);

    let table = NegativeSamplingTable::new(vocab);
    let policy = config.subsample_policy();
    let keep: Vec<f64> = (0..vocab.len() as u32).map(|id| keep_probability(id, vocab, policy)).collect();
    let params = &model.params;
    let mut kept = Vec::new();
    let mut negatives = alloc::vec![0u32; config.negatives];
    let mut h = alloc::vec![0f32; dim];
    let mut grad_h = alloc::vec![0f32; dim];
    let total = (steps * ids.len()).max(1) as f64;
    let mut processed = 0usize;
    let mut sample_rng = seeded_rng(seed, 1);

    for _ in 0..steps {
        for_each_example(&ids, &keep, config.window, &mut rng, &mut kept, |target, left, right| {
            let lr = (lr0 * (1.0 - processed as f64 / total)).max(config.lr_min) as f32;
            processed += 1;
            let n_ctx = left.len() + right.len();
            h.copy_from_slice(&doc);
            for &w in left.iter().chain(right) {
                axpy(1.0, params.word_in.row(w as usize), &mut h);
            }
            let scale = 1.0 / (n_ctx + 1) as f32;
            h.iter_mut().for_each(|x| *x *= scale);

            table.sample_into(&mut negatives, target, &mut sample_rng);
            grad_h.iter_mut().for_each(|g| *g = 0.0);
            let outputs = core::iter::once((target, true)).chain(negatives.iter().map(|&n| (n, false)));
            for (id, label) in outputs {
                let row = params.word_out.row(id as usize);
                let coef = score_coefficient(dot(&h, row) as f64, label) as f32;
                axpy(coef, row, &mut grad_h);
            }
            axpy(-lr * scale, &grad_h, &mut doc);
        });
    }
    Ok(doc)
}
