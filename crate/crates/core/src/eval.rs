//! Identification protocols over a [`SimilarityIndex`].
//!
//! * split-half: each author's `<id>_A` fingerprint must retrieve `<id>_B`
//!   among all other fingerprints;
//! * temporal: each `<id>_<year>` fingerprint must retrieve a document of
//!   the same author among fingerprints of strictly earlier years.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::AuthorDocument;
use crate::index::SimilarityIndex;
use crate::pvdm::{Model, TrainConfig};
use crate::{Error, Result};

pub const SPLIT_HALF: &str = "split-half";
pub const TEMPORAL: &str = "temporal";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorOutcome {
    /// Fingerprint used as the query.
    pub query: String,
    pub author: String,
    /// Rank-1 candidate.
    pub matched: Option<String>,
    pub matched_score: Option<f64>,
    /// 1-based rank of the best counterpart in the candidate pool.
    pub true_rank: Option<usize>,
    pub positive: bool,
    pub post_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: String,
    pub k: usize,
    pub n_authors: usize,
    pub positives: usize,
    pub accuracy: f64,
    /// Sorted by query key.
    pub outcomes: Vec<AuthorOutcome>,
    pub config: Option<TrainConfig>,
    /// Filled in by callers that can read a clock.
    pub wall_time_secs: Option<f64>,
}

impl EvalReport {
    fn assemble(protocol: &str, k: usize, mut outcomes: Vec<AuthorOutcome>) -> Self {
        outcomes.sort_by(|a, b| a.query.cmp(&b.query));
        let positives = outcomes.iter().filter(|o| o.positive).count();
        let n = outcomes.len();
        EvalReport {
            protocol: protocol.into(),
            k,
            n_authors: n,
            positives,
            accuracy: if n == 0 { 0.0 } else { positives as f64 / n as f64 },
            outcomes,
            config: None,
            wall_time_secs: None,
        }
    }

    /// Accuracy had the positive criterion been "counterpart within top `k`".
    pub fn accuracy_at(&self, k: usize) -> f64 {
        if self.n_authors == 0 {
            return 0.0;
        }
        let hits = self.outcomes.iter().filter(|o| o.true_rank.is_some_and(|r| r <= k)).count();
        hits as f64 / self.n_authors as f64
    }
}

/// Split-half identification at top-`k`.
pub fn split_half_eval(index: &SimilarityIndex, k: usize) -> Result<EvalReport> {
    if k == 0 {
        return Err(Error::Invalid("k must be >= 1".into()));
    }
    let mut halves: BTreeMap<&str, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for (i, key) in index.keys().iter().enumerate() {
        if let Some(author) = key.strip_suffix("_A") {
            halves.entry(author).or_default().0 = Some(i);
        } else if let Some(author) = key.strip_suffix("_B") {
            halves.entry(author).or_default().1 = Some(i);
        }
    }
    let unpaired: Vec<String> = halves
        .values()
        .filter_map(|pair| match *pair {
            (Some(a), None) => Some(index.key(a).to_string()),
            (None, Some(b)) => Some(index.key(b).to_string()),
            _ => None,
        })
        .collect();
    if !unpaired.is_empty() {
        return Err(Error::UnpairedKeys(unpaired));
    }
    if halves.is_empty() {
        return Err(Error::Invalid("index holds no _A/_B pairs".into()));
    }

    let mut outcomes = Vec::with_capacity(halves.len());
    for (author, pair) in &halves {
        let (Some(a), Some(b)) = *pair else { unreachable!() };
        let query = index.vector(a);
        let top = index.top_k_where(query, 1, |i| i != a)?;
        let rank = index.rank_of(query, b, |i| i != a)?;
        outcomes.push(AuthorOutcome {
            query: index.key(a).to_string(),
            author: author.to_string(),
            matched: top.first().map(|n| n.key.clone()),
            matched_score: top.first().map(|n| n.score),
            true_rank: Some(rank),
            positive: rank <= k,
            post_count: index.post_count(a) + index.post_count(b),
        });
    }
    Ok(EvalReport::assemble(SPLIT_HALF, k, outcomes))
}

/// Split a `<id>_<year>` key.
pub fn parse_year_key(key: &str) -> Option<(&str, i32)> {
    let (author, year) = key.rsplit_once('_')?;
    if author.is_empty() {
        return None;
    }
    Some((author, year.parse().ok()?))
}

/// Candidates for a temporal query: every fingerprint of a strictly
/// earlier year, any author.
pub fn temporal_pool(index: &SimilarityIndex, query: usize) -> Vec<usize> {
    let Some((_, year)) = parse_year_key(index.key(query)) else {
        return Vec::new();
    };
    (0..index.len())
        .filter(|&i| parse_year_key(index.key(i)).is_some_and(|(_, y)| y < year))
        .collect()
}

/// Temporal stability: each (author, year) with an earlier year of the same
/// author queries the pool of earlier-year fingerprints.
pub fn temporal_eval(index: &SimilarityIndex, k: usize) -> Result<EvalReport> {
    if k == 0 {
        return Err(Error::Invalid("k must be >= 1".into()));
    }
    let parsed: Vec<Option<(&str, i32)>> = index.keys().iter().map(|k| parse_year_key(k)).collect();
    let mut outcomes = Vec::new();
    for (q, entry) in parsed.iter().enumerate() {
        let Some((author, _)) = *entry else { continue };
        let pool = temporal_pool(index, q);
        let own: Vec<usize> = pool.iter().copied().filter(|&i| parsed[i].is_some_and(|(a, _)| a == author)).collect();
        if own.is_empty() {
            continue;
        }
        let query = index.vector(q);
        let in_pool = |i: usize| pool.binary_search(&i).is_ok();
        let top = index.top_k_where(query, 1, in_pool)?;
        let best_own = index.top_k_where(query, 1, |i| own.binary_search(&i).is_ok())?;
        let best_own = index.position(&best_own[0].key).expect("key from index");
        let rank = index.rank_of(query, best_own, in_pool)?;
        outcomes.push(AuthorOutcome {
            query: index.key(q).to_string(),
            author: author.to_string(),
            matched: top.first().map(|n| n.key.clone()),
            matched_score: top.first().map(|n| n.score),
            true_rank: Some(rank),
            positive: rank <= k,
            post_count: index.post_count(q),
        });
    }
    if outcomes.is_empty() {
        return Err(Error::NoTemporalQueries);
    }
    Ok(EvalReport::assemble(TEMPORAL, k, outcomes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRow {
    pub min_posts: u32,
    /// Authors with at least `min_posts` posts.
    pub n_authors: usize,
    /// `None` when the bucket is empty.
    pub accuracy: Option<f64>,
    /// The complementary bucket, authors below `min_posts`.
    pub n_below: usize,
    pub accuracy_below: Option<f64>,
}

/// Accuracy restricted to authors at or above each post-count threshold.
pub fn activity_breakdown(report: &EvalReport, thresholds: &[u32]) -> Vec<ActivityRow> {
    let bucket = |keep: &dyn Fn(u32) -> bool| {
        let members: Vec<&AuthorOutcome> = report.outcomes.iter().filter(|o| keep(o.post_count)).collect();
        let acc = if members.is_empty() {
            None
        } else {
            Some(members.iter().filter(|o| o.positive).count() as f64 / members.len() as f64)
        };
        (members.len(), acc)
    };
    thresholds
        .iter()
        .map(|&t| {
            let (n_authors, accuracy) = bucket(&|c| c >= t);
            let (n_below, accuracy_below) = bucket(&|c| c < t);
            ActivityRow {
                min_posts: t,
                n_authors,
                accuracy,
                n_below,
                accuracy_below,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub dim: usize,
    pub result: Result<EvalReport>,
}

/// Train one model per dimension (otherwise identical config) and run the
/// split-half protocol on each. A failing dimension is reported and the
/// sweep continues.
pub fn dimension_sweep<F>(documents: &[AuthorDocument], dims: &[usize], base: TrainConfig, k: usize, mut train: F) -> Result<Vec<SweepPoint>>
where
    F: FnMut(&[AuthorDocument], TrainConfig) -> Result<Model>,
{
    if dims.is_empty() {
        return Err(Error::Invalid("dimension list is empty".into()));
    }
    Ok(dims
        .iter()
        .map(|&dim| {
            let config = TrainConfig { dim, ..base };
            let result = train(documents, config).and_then(|model| {
                let index = SimilarityIndex::from_model(&model)?;
                let mut report = split_half_eval(&index, k)?;
                report.config = Some(config);
                Ok(report)
            });
            SweepPoint { dim, result }
        })
        .collect())
}
