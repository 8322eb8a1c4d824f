//! Word vocabulary, frequent-word subsampling and the negative sampler.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AuthorDocument;
use crate::{Error, Result};

/// Exponent applied to raw counts in the noise distribution.
pub const DISTORTION: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    word_to_id: BTreeMap<String, u32>,
    id_to_word: Vec<String>,
    counts: Vec<u64>,
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    /// Count every token and keep words seen at least `min_count` times.
    ///
    /// Ids follow descending frequency; equal counts are ordered
    /// lexicographically.
    pub fn build(documents: &[AuthorDocument], min_count: u64) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be >= 1".into()));
        }
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for doc in documents {
            for tok in &doc.tokens {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        // BTreeMap iteration is already lexicographic; a stable sort keeps it for ties.
        kept.sort_by_key(|&(_, c)| core::cmp::Reverse(c));
        Self::from_counts(kept.into_iter().map(|(w, c)| (String::from(w), c)).collect(), min_count)
    }

    /// Rebuild from `(word, count)` pairs already in id order.
    pub fn from_counts(entries: Vec<(String, u64)>, min_count: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        let mut word_to_id = BTreeMap::new();
        let mut id_to_word = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (id, (word, count)) in entries.into_iter().enumerate() {
            if word_to_id.insert(word.clone(), id as u32).is_some() {
                return Err(Error::Invalid(alloc::format!("duplicate vocabulary word {word:?}")));
            }
            id_to_word.push(word);
            counts.push(count);
        }
        let total_tokens = counts.iter().sum();
        Ok(Vocabulary {
            word_to_id,
            id_to_word,
            counts,
            total_tokens,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.id_to_word[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn words(&self) -> &[String] {
        &self.id_to_word
    }

    /// Sum of the counts of retained words.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Token ids of `tokens`, skipping out-of-vocabulary words.
    pub fn encode<'a>(&self, tokens: impl IntoIterator<Item = &'a String>) -> Vec<u32> {
        tokens.into_iter().filter_map(|t| self.id(t)).collect()
    }
}

/// Frequent-word subsampling threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SubsamplePolicy {
    Disabled,
    Threshold(f64),
}

impl SubsamplePolicy {
    /// `t <= 0` means disabled.
    pub fn from_threshold(t: f64) -> Self {
        if t > 0.0 {
            SubsamplePolicy::Threshold(t)
        } else {
            SubsamplePolicy::Disabled
        }
    }

    pub fn threshold(self) -> f64 {
        match self {
            SubsamplePolicy::Disabled => 0.0,
            SubsamplePolicy::Threshold(t) => t,
        }
    }
}

/// Probability of keeping one occurrence of `word_id` during training.
///
/// With `z` the word's relative frequency, words above the threshold `t`
/// are kept with probability `(sqrt(z/t) + 1) * t/z`.
pub fn keep_probability(word_id: u32, vocab: &Vocabulary, policy: SubsamplePolicy) -> f64 {
    let SubsamplePolicy::Threshold(t) = policy else {
        return 1.0;
    };
    let z = vocab.count(word_id) as f64 / vocab.total_tokens() as f64;
    keep_probability_for(z, t)
}

pub(crate) fn keep_probability_for(z: f64, t: f64) -> f64 {
    if z <= t {
        return 1.0;
    }
    let p = (Float::sqrt(z / t) + 1.0) * (t / z);
    p.min(1.0)
}

/// Cumulative `count^0.75` weights searched by bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSamplingTable {
    cumulative: Vec<f64>,
}

impl NegativeSamplingTable {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self::from_counts(vocab.counts())
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += Float::powf(c as f64, DISTORTION);
                acc
            })
            .collect();
        NegativeSamplingTable { cumulative }
    }

    pub fn cumulative_weights(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    /// Probability of drawing `id` (before exclusion).
    pub fn probability(&self, id: u32) -> f64 {
        let i = id as usize;
        let prev = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        (self.cumulative[i] - prev) / self.total()
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// One draw from the distorted unigram distribution.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u = rng.gen::<f64>() * self.total();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1) as u32
    }

    /// Fill `out` with draws, redrawing any that equal `exclude`.
    ///
    /// Needs at least two words with nonzero weight.
    pub fn sample_into<R: Rng + ?Sized>(&self, out: &mut [u32], exclude: u32, rng: &mut R) {
        debug_assert!(self.len() >= 2);
        for slot in out.iter_mut() {
            *slot = loop {
                let id = self.draw(rng);
                if id != exclude {
                    break id;
                }
            };
        }
    }

    pub fn sample_negatives<R: Rng + ?Sized>(&self, k: usize, exclude: u32, rng: &mut R) -> Vec<u32> {
        let mut out = alloc::vec![0; k];
        self.sample_into(&mut out, exclude, rng);
        out
    }
}
