//! Lock-free multi-threaded training.
//!
//! Each epoch's shuffled document order is cut into one contiguous shard per
//! worker. Workers update the shared matrices without synchronization, so
//! overlapping rows are last-write-wins and results depend on scheduling.
//! With one worker this is exactly [`stylo_core::pvdm::train`].

use std::cell::UnsafeCell;

use stylo_core::corpus::AuthorDocument;
use stylo_core::pvdm::{self, EpochProgress, Model, Params, TrainConfig, TrainStats, WorkerRngs};

struct Shared<'a>(UnsafeCell<&'a mut Params<f32>>);

// Workers write disjoint-or-racing rows through aliased references; the
// races are the accepted cost of hogwild SGD. No worker resizes a matrix.
unsafe impl Sync for Shared<'_> {}

impl Shared<'_> {
    #[allow(clippy::mut_from_ref)]
    unsafe fn params(&self) -> &mut Params<f32> {
        &mut **self.0.get()
    }
}

pub fn train(documents: &[AuthorDocument], config: TrainConfig) -> stylo_core::Result<(Model, TrainStats)> {
    if config.workers <= 1 {
        return pvdm::train(documents, config);
    }
    let mut rngs: Vec<WorkerRngs> = Vec::new();
    pvdm::train_with(documents, config, |trainer, params, order| {
        let workers = config.workers.min(order.len()).max(1);
        if rngs.is_empty() {
            rngs = (0..config.workers).map(|w| trainer.worker_rngs(w)).collect();
        }
        let chunk = order.len().div_ceil(workers);
        let shared = Shared(UnsafeCell::new(params));
        let shared = &shared;
        let results: Vec<EpochProgress> = std::thread::scope(|scope| {
            let handles: Vec<_> = order
                .chunks(chunk)
                .zip(rngs.iter_mut())
                .map(|(shard, rng)| scope.spawn(move || trainer.train_shard(unsafe { shared.params() }, shard, rng)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
        });
        let mut total = EpochProgress::default();
        for r in results {
            total.merge(r);
        }
        total
    })
}
