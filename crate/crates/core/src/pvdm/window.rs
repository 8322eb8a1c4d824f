use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::vocab::{keep_probability, SubsamplePolicy, Vocabulary};

/// A centre word and its (ordered) context inside one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub doc_index: usize,
    pub target: u32,
    pub context: Vec<u32>,
}

/// Walk the examples of one encoded document.
///
/// First every id is kept with probability `keep[id]` (one draw per id whose
/// probability is below 1). Then, if at least two ids survive, a radius `b`
/// is drawn from `1..=window` for each position and the context is the
/// surviving ids within `b` positions, centre excluded.
pub fn for_each_example<R, F>(ids: &[u32], keep: &[f64], window: usize, rng: &mut R, kept: &mut Vec<u32>, mut f: F)
where
    R: Rng + ?Sized,
    F: FnMut(u32, &[u32], &[u32]),
{
    kept.clear();
    for &id in ids {
        let p = keep[id as usize];
        if p >= 1.0 || rng.gen::<f64>() < p {
            kept.push(id);
        }
    }
    let n = kept.len();
    if n < 2 {
        return;
    }
    for i in 0..n {
        let b = rng.gen_range(1..=window);
        let lo = i.saturating_sub(b);
        let hi = (i + b).min(n - 1);
        f(kept[i], &kept[lo..i], &kept[i + 1..=hi]);
    }
}

/// Materialize the examples of one document. Out-of-vocabulary tokens are
/// dropped before windowing.
pub fn extract_examples<R: Rng + ?Sized>(
    tokens: &[String],
    doc_index: usize,
    vocab: &Vocabulary,
    policy: SubsamplePolicy,
    window: usize,
    rng: &mut R,
) -> Vec<TrainingExample> {
    let ids = vocab.encode(tokens);
    let keep: Vec<f64> = (0..vocab.len() as u32).map(|id| keep_probability(id, vocab, policy)).collect();
    let mut out = Vec::new();
    let mut kept = Vec::new();
    for_each_example(&ids, &keep, window, rng, &mut kept, |target, left, right| {
        let mut context = Vec::with_capacity(left.len() + right.len());
        context.extend_from_slice(left);
        context.extend_from_slice(right);
        out.push(TrainingExample {
            doc_index,
            target,
            context,
        });
    });
    out
}
