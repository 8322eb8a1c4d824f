//! Forward pass, negative-sampling loss and its gradient.
//!
//! Everything is generic over the float type: training runs in `f32`, the
//! gradient checks run the same code in `f64`.

use alloc::vec::Vec;

use num_traits::Float;

use super::Params;

/// Scores are clipped to `[-CLIP, CLIP]` before the logistic function.
pub const CLIP: f64 = 6.0;

pub(crate) fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail = chunks_a.remainder().iter().zip(chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for i in 0..8 {
            acc[i] = acc[i] + ca[i] * cb[i];
        }
    }
    let mut sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (&x, &y) in tail {
        sum = sum + x * y;
    }
    sum
}

#[inline]
pub(crate) fn axpy<T: Float>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `-log(sigmoid(x))` for clipped scores.
fn neg_log_sigmoid(x: f64) -> f64 {
    (-x).exp().ln_1p()
}

fn clip(score: f64) -> f64 {
    score.clamp(-CLIP, CLIP)
}

/// Mean of the context word input vectors and the document vector.
pub fn forward_hidden<T: Float>(params: &Params<T>, context: &[u32], doc: usize, h: &mut [T]) {
    debug_assert!(!context.is_empty());
    h.copy_from_slice(params.docs.row(doc));
    for &w in context {
        axpy(T::one(), params.word_in.row(w as usize), h);
    }
    let scale = T::one() / T::from(context.len() + 1).unwrap();
    for x in h.iter_mut() {
        *x = *x * scale;
    }
}

/// Negative-sampling loss of `target` against `negatives` given hidden `h`:
/// `-log s(h.o_t) - sum_n log s(-h.o_n)`, scores clipped to `[-6, 6]`.
pub fn example_loss<T: Float>(h: &[T], target: u32, negatives: &[u32], params: &Params<T>) -> f64 {
    let out = &params.word_out;
    let mut loss = neg_log_sigmoid(clip(dot(h, out.row(target as usize)).to_f64().unwrap()));
    for &n in negatives {
        loss += neg_log_sigmoid(-clip(dot(h, out.row(n as usize)).to_f64().unwrap()));
    }
    loss
}

/// Derivative of the loss w.r.t. one output score.
///
/// Exact inside the clip range. Outside it the logistic is taken as 0 or 1,
/// so a score saturated on the correct side gets no update and one
/// saturated on the wrong side gets the full push.
pub(crate) fn score_coefficient(score: f64, positive: bool) -> f64 {
    let p = if score > CLIP {
        1.0
    } else if score < -CLIP {
        0.0
    } else {
        sigmoid(score)
    };
    if positive {
        p - 1.0
    } else {
        p
    }
}

/// Gradients of [`example_loss`] for every row that contributes to it.
/// Rows that appear more than once are summed into a single entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub hidden: Vec<T>,
    pub word_out: Vec<(u32, Vec<T>)>,
    pub word_in: Vec<(u32, Vec<T>)>,
    pub doc: Vec<T>,
}

fn add_row<T: Float>(rows: &mut Vec<(u32, Vec<T>)>, id: u32, alpha: T, x: &[T]) {
    let pos = match rows.iter().position(|(r, _)| *r == id) {
        Some(pos) => pos,
        None => {
            rows.push((id, alloc::vec![T::zero(); x.len()]));
            rows.len() - 1
        }
    };
    axpy(alpha, x, &mut rows[pos].1);
}

pub fn gradients<T: Float>(params: &Params<T>, doc: usize, target: u32, context: &[u32], negatives: &[u32]) -> Gradients<T> {
    let dim = params.dim();
    let mut h = alloc::vec![T::zero(); dim];
    forward_hidden(params, context, doc, &mut h);

    let mut hidden = alloc::vec![T::zero(); dim];
    let mut word_out = Vec::new();
    let outputs = core::iter::once((target, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (id, positive) in outputs {
        let row = params.word_out.row(id as usize);
        let coef = T::from(score_coefficient(dot(&h, row).to_f64().unwrap(), positive)).unwrap();
        axpy(coef, row, &mut hidden);
        add_row(&mut word_out, id, coef, &h);
    }

    let scale = T::one() / T::from(context.len() + 1).unwrap();
    let mut word_in = Vec::new();
    for &w in context {
        add_row(&mut word_in, w, scale, &hidden);
    }
    let doc = hidden.iter().map(|&g| g * scale).collect();
    Gradients {
        hidden,
        word_out,
        word_in,
        doc,
    }
}

/// Reusable buffers for [`sgd_step`].
#[derive(Debug, Clone)]
pub struct Scratch<T> {
    h: Vec<T>,
    grad_h: Vec<T>,
    coefs: Vec<T>,
}

impl<T: Float> Scratch<T> {
    pub fn new(dim: usize) -> Self {
        Scratch {
            h: alloc::vec![T::zero(); dim],
            grad_h: alloc::vec![T::zero(); dim],
            coefs: Vec::new(),
        }
    }
}

/// One gradient step on a single example. Returns the loss before the step.
///
/// All coefficients are computed from the pre-update rows, so the step is
/// exactly `-lr` times [`gradients`] even when negatives repeat.
#[allow(clippy::too_many_arguments)]
pub fn sgd_step<T: Float>(
    params: &mut Params<T>,
    doc: usize,
    target: u32,
    context: &[u32],
    negatives: &[u32],
    lr: T,
    scratch: &mut Scratch<T>,
) -> f64 {
    let Scratch { h, grad_h, coefs } = scratch;
    forward_hidden(params, context, doc, h);
    grad_h.iter_mut().for_each(|g| *g = T::zero());
    coefs.clear();

    let mut loss = 0.0;
    let outputs = core::iter::once((target, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (id, positive) in outputs {
        let row = params.word_out.row(id as usize);
        let raw = dot(h, row).to_f64().unwrap();
        let score = clip(raw);
        loss += if positive { neg_log_sigmoid(score) } else { neg_log_sigmoid(-score) };
        let coef = T::from(score_coefficient(raw, positive)).unwrap();
        axpy(coef, row, grad_h);
        coefs.push(coef);
    }

    let outputs = core::iter::once(target).chain(negatives.iter().copied());
    for (id, &coef) in outputs.zip(coefs.iter()) {
        axpy(-lr * coef, h, params.word_out.row_mut(id as usize));
    }

    let step = -lr / T::from(context.len() + 1).unwrap();
    for &w in context {
        axpy(step, grad_h, params.word_in.row_mut(w as usize));
    }
    axpy(step, grad_h, params.docs.row_mut(doc));
    loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pvdm::{Matrix, Params};
    use crate::seeded_rng;
    use alloc::vec;
    use rand::Rng;

    fn random_params(n_words: usize, n_docs: usize, dim: usize, scale: f64, seed: u64) -> Params<f64> {
        let mut rng = seeded_rng(seed, 0);
        let mut fill = |rows: usize| {
            let data = (0..rows * dim).map(|_| rng.gen_range(-scale..scale)).collect();
            Matrix::from_vec(rows, dim, data).unwrap()
        };
        Params {
            word_in: fill(n_words),
            word_out: fill(n_words),
            docs: fill(n_docs),
        }
    }

    #[test]
    fn hidden_is_mean() {
        let mut p = random_params(5, 2, 8, 1.0, 1);
        let mut h = vec![0.0; 8];
        forward_hidden(&p, &[3], 1, &mut h);
        for i in 0..8 {
            let expected = (p.word_in.row(3)[i] + p.docs.row(1)[i]) / 2.0;
            assert!((h[i] - expected).abs() < 1e-15);
        }

        // Independent mean over four rows.
        forward_hidden(&p, &[0, 2, 2], 0, &mut h);
        for i in 0..8 {
            let rows = [p.word_in.row(0)[i], p.word_in.row(2)[i], p.word_in.row(2)[i], p.docs.row(0)[i]];
            let mean = rows.iter().sum::<f64>() / 4.0;
            assert!((h[i] - mean).abs() < 1e-14);
        }

        p.word_in.as_mut_slice().iter_mut().for_each(|x| *x = 0.0);
        p.docs.as_mut_slice().iter_mut().for_each(|x| *x = 0.0);
        forward_hidden(&p, &[1, 4], 0, &mut h);
        assert!(h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_output_loss() {
        let mut p = random_params(10, 1, 8, 0.5, 2);
        p.word_out.as_mut_slice().iter_mut().for_each(|x| *x = 0.0);
        let h: Vec<f64> = p.word_in.row(0).to_vec();
        let loss = example_loss(&h, 1, &[2, 3, 4, 5, 6], &p);
        assert!((loss - 4.1588830833596715).abs() < 1e-12);
    }

    #[test]
    fn clipped_loss_floor() {
        let mut p = random_params(4, 1, 2, 0.1, 3);
        p.word_out.row_mut(0).copy_from_slice(&[100.0, 0.0]);
        p.word_out.row_mut(1).copy_from_slice(&[-100.0, 0.0]);
        p.word_out.row_mut(2).copy_from_slice(&[-100.0, 0.0]);
        let loss = example_loss(&[1.0, 0.0], 0, &[1, 2], &p);
        let floor = 3.0 * (1.0 + (-6.0f64).exp()).ln();
        assert!((loss - floor).abs() < 1e-15);
    }

    #[test]
    fn loss_matches_direct_formula() {
        let p = random_params(12, 1, 8, 0.8, 4);
        let h: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).sin()).collect();
        let negatives = [3u32, 7, 9];
        let s = |id: usize| h.iter().zip(p.word_out.row(id)).map(|(a, b)| a * b).sum::<f64>();
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let expected = -sig(s(1)).ln() - negatives.iter().map(|&n| sig(-s(n as usize)).ln()).sum::<f64>();
        assert!((example_loss(&h, 1, &negatives, &p) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_lr_is_noop() {
        let mut p = random_params(6, 2, 4, 0.3, 5);
        let before = p.clone();
        sgd_step(&mut p, 1, 0, &[1, 2], &[3, 4], 0.0, &mut Scratch::new(4));
        assert_eq!(p, before);
    }

    #[test]
    fn step_matches_gradients() {
        let mut p = random_params(8, 3, 6, 0.4, 6);
        let before = p.clone();
        let (context, negatives) = ([1u32, 5, 1], [2u32, 2, 7]);
        let g = gradients(&before, 2, 0, &context, &negatives);
        let lr = 0.05;
        sgd_step(&mut p, 2, 0, &context, &negatives, lr, &mut Scratch::new(6));
        let mut expected = before.clone();
        for (id, row) in &g.word_out {
            axpy(-lr, row, expected.word_out.row_mut(*id as usize));
        }
        for (id, row) in &g.word_in {
            axpy(-lr, row, expected.word_in.row_mut(*id as usize));
        }
        axpy(-lr, &g.doc, expected.docs.row_mut(2));
        for (a, b) in p.word_in.as_slice().iter().zip(expected.word_in.as_slice())
            .chain(p.word_out.as_slice().iter().zip(expected.word_out.as_slice()))
            .chain(p.docs.as_slice().iter().zip(expected.docs.as_slice()))
        {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (0..13).map(|i| i as f64).collect();
        let expected: f64 = a.iter().map(|x| x * x).sum();
        assert_eq!(dot(&a, &a), expected);
    }
}
