//! Exact cosine retrieval over unit-normalized author fingerprints.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::pvdm::Model;
use crate::{Error, Result};

fn norm(v: &[f32]) -> f64 {
    Float::sqrt(v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>())
}

/// Cosine similarity, clamped to `[-1, 1]`. Fails on a zero vector.
pub fn cosine<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b): (f64, f64) = (a.into(), b.into());
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroVector(None));
    }
    Ok((uv / (Float::sqrt(uu) * Float::sqrt(vv))).clamp(-1.0, 1.0))
}

/// A unit-norm author vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorFingerprint {
    pub key: String,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub key: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityIndex {
    dim: usize,
    keys: Vec<String>,
    vectors: Vec<f32>,
    post_counts: Vec<u32>,
    lookup: BTreeMap<String, usize>,
}

impl SimilarityIndex {
    pub fn new(dim: usize) -> Self {
        SimilarityIndex {
            dim,
            keys: Vec::new(),
            vectors: Vec::new(),
            post_counts: Vec::new(),
            lookup: BTreeMap::new(),
        }
    }

    /// One fingerprint per document of a trained model.
    pub fn from_model(model: &Model) -> Result<Self> {
        let mut index = SimilarityIndex::new(model.dim());
        for (i, key) in model.doc_keys.iter().enumerate() {
            index.insert(key.clone(), model.params.docs.row(i), model.doc_post_counts[i])?;
        }
        Ok(index)
    }

    /// Store an L2-normalized copy of `vector`.
    pub fn insert(&mut self, key: String, vector: &[f32], post_count: u32) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if key.is_empty() {
            return Err(Error::Invalid("fingerprint key must be nonempty".into()));
        }
        if self.lookup.contains_key(&key) {
            return Err(Error::DuplicateKeys(alloc::vec![key]));
        }
        let n = norm(vector);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector(Some(key)));
        }
        self.vectors.extend(vector.iter().map(|&x| (f64::from(x) / n) as f32));
        self.lookup.insert(key.clone(), self.keys.len());
        self.keys.push(key);
        self.post_counts.push(post_count);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn key(&self, i: usize) -> &str {
        &self.keys[i]
    }

    pub fn position(&self, key: &str) -> Option<usize> {
        self.lookup.get(key).copied()
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn post_count(&self, i: usize) -> u32 {
        self.post_counts[i]
    }

    pub fn fingerprints(&self) -> impl Iterator<Item = AuthorFingerprint> + '_ {
        (0..self.len()).map(|i| AuthorFingerprint {
            key: self.keys[i].clone(),
            vector: self.vector(i).to_vec(),
        })
    }

    /// Cosine between stored fingerprint `i` and a unit-norm `query`.
    pub fn score(&self, i: usize, query: &[f32]) -> f64 {
        let dot: f64 = self
            .vector(i)
            .iter()
            .zip(query)
            .map(|(&a, &b)| f64::from(a) * f64::from(b))
            .sum();
        dot.clamp(-1.0, 1.0)
    }

    /// Ranking order: higher score first, then ascending key.
    fn rank_cmp(&self, a: (f64, usize), b: (f64, usize)) -> Ordering {
        b.0.total_cmp(&a.0).then_with(|| self.keys[a.1].cmp(&self.keys[b.1]))
    }

    /// Exact top-`k` among the fingerprints accepted by `candidate`.
    pub fn top_k_where<F>(&self, query: &[f32], k: usize, candidate: F) -> Result<Vec<Neighbor>>
    where
        F: Fn(usize) -> bool,
    {
        let query = self.unit_query(query)?;
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .filter(|&i| candidate(i))
            .map(|i| (self.score(i, &query), i))
            .collect();
        if k < scored.len() {
            scored.select_nth_unstable_by(k, |&a, &b| self.rank_cmp(a, b));
            scored.truncate(k);
        }
        scored.sort_unstable_by(|&a, &b| self.rank_cmp(a, b));
        Ok(scored
            .into_iter()
            .map(|(score, i)| Neighbor {
                key: self.keys[i].clone(),
                score,
            })
            .collect())
    }

    /// Nearest fingerprints to the stored `key`, excluding itself.
    pub fn most_similar(&self, key: &str, k: usize) -> Result<Vec<Neighbor>> {
        let q = self.position(key).ok_or_else(|| Error::UnknownKey(key.into()))?;
        if k == 0 {
            return Err(Error::Invalid("k must be >= 1".into()));
        }
        self.top_k_where(self.vector(q), k, |i| i != q)
    }

    /// Nearest fingerprints to an arbitrary vector.
    pub fn most_similar_to(&self, query: &[f32], k: usize) -> Result<Vec<Neighbor>> {
        self.top_k_where(query, k, |_| true)
    }

    /// 1-based rank that fingerprint `target` would get among the accepted
    /// candidates for `query`.
    pub fn rank_of<F>(&self, query: &[f32], target: usize, candidate: F) -> Result<usize>
    where
        F: Fn(usize) -> bool,
    {
        let query = self.unit_query(query)?;
        let t = (self.score(target, &query), target);
        let ahead = (0..self.len())
            .filter(|&i| i != target && candidate(i))
            .filter(|&i| self.rank_cmp((self.score(i, &query), i), t) == Ordering::Less)
            .count();
        Ok(ahead + 1)
    }

    fn unit_query(&self, query: &[f32]) -> Result<Vec<f32>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        let n = norm(query);
        if n == 0.0 {
            return Err(Error::ZeroVector(None));
        }
        Ok(query.iter().map(|&x| (f64::from(x) / n) as f32).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_index(n: usize, dim: usize, seed: u64) -> SimilarityIndex {
        let mut rng = seeded_rng(seed, 0);
        let mut index = SimilarityIndex::new(dim);
        for i in 0..n {
            let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            index.insert(format!("k{i:04}"), &v, 1).unwrap();
        }
        index
    }

    #[test]
    fn cosine_values() {
        assert!((cosine(&[3.0f64, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 1/sqrt(2)
        assert!((cosine(&[1.0f64, 1.0], &[1.0, 0.0]).unwrap() - 0.7071067811865475).abs() < 1e-12);
        assert_eq!(cosine(&[0.0f64, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector(None)));
    }

    #[test]
    fn two_keys() {
        let mut index = SimilarityIndex::new(2);
        index.insert("a".into(), &[1.0, 0.0], 1).unwrap();
        index.insert("b".into(), &[-1.0, 0.5], 1).unwrap();
        assert_eq!(index.most_similar("a", 5).unwrap()[0].key, "b");
        assert_eq!(index.most_similar("b", 1).unwrap()[0].key, "a");
        assert!(matches!(index.most_similar("zzz", 1), Err(Error::UnknownKey(_))));
    }

    #[test]
    fn identical_vector_ranks_first() {
        let mut index = random_index(20, 8, 3);
        let copy = index.vector(7).to_vec();
        index.insert("twin".into(), &copy, 1).unwrap();
        let top = index.most_similar("twin", 3).unwrap();
        assert_eq!(top[0].key, "k0007");
        assert!((top[0].score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ties_break_by_key() {
        let mut index = SimilarityIndex::new(2);
        index.insert("q".into(), &[1.0, 0.0], 1).unwrap();
        index.insert("c".into(), &[0.0, 1.0], 1).unwrap();
        index.insert("b".into(), &[0.0, -1.0], 1).unwrap();
        index.insert("a".into(), &[0.0, 1.0], 1).unwrap();
        let keys: Vec<String> = index.most_similar("q", 3).unwrap().into_iter().map(|n| n.key).collect();
        assert_eq!(keys, vec!["a", "b", "c"]);
    }

    #[test]
    fn rejects_bad_vectors() {
        let mut index = SimilarityIndex::new(3);
        assert_eq!(index.insert("z".into(), &[0.0; 3], 1), Err(Error::ZeroVector(Some("z".into()))));
        assert!(index.insert("short".into(), &[1.0], 1).is_err());
        index.insert("a".into(), &[1.0, 2.0, 3.0], 1).unwrap();
        assert!(index.insert("a".into(), &[1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn stored_vectors_are_unit() {
        let index = random_index(50, 17, 9);
        for fp in index.fingerprints() {
            assert!((norm(&fp.vector) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn matches_full_sort_oracle() {
        let index = random_index(200, 12, 5);
        for q in [0usize, 57, 199] {
            let key = index.key(q).to_string();
            let got = index.most_similar(&key, 10).unwrap();
            let mut all: Vec<(f64, String)> = (0..index.len())
                .filter(|&i| i != q)
                .map(|i| (cosine(index.vector(q), index.vector(i)).unwrap(), index.key(i).to_string()))
                .collect();
            all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            for (n, (score, key)) in got.iter().zip(&all) {
                assert_eq!(&n.key, key);
                assert!((n.score - score).abs() < 1e-6);
            }
            assert_eq!(got.len(), 10);
        }
    }

    #[test]
    fn rank_of_agrees_with_top_k() {
        let index = random_index(60, 6, 2);
        let q = index.vector(0).to_vec();
        let ranked = index.top_k_where(&q, 59, |i| i != 0).unwrap();
        for (pos, n) in ranked.iter().enumerate() {
            let t = index.position(&n.key).unwrap();
            assert_eq!(index.rank_of(&q, t, |i| i != 0).unwrap(), pos + 1);
        }
    }

    use alloc::string::ToString;

    proptest! {
        #[test]
        fn cosine_symmetric(u in proptest::collection::vec(-10.0f64..10.0, 5), v in proptest::collection::vec(-10.0f64..10.0, 5)) {
            if let (Ok(a), Ok(b)) = (cosine(&u, &v), cosine(&v, &u)) {
                prop_assert_eq!(a, b);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn rankings_scale_invariant(seed in 0u64..1000, scale in 0.01f32..100.0) {
            let index = random_index(30, 8, seed);
            let mut scaled = SimilarityIndex::new(8);
            for i in 0..index.len() {
                let v: Vec<f32> = index.vector(i).iter().map(|x| x * scale).collect();
                scaled.insert(index.key(i).to_string(), &v, 1).unwrap();
            }
            let a: Vec<String> = index.most_similar("k0000", 10).unwrap().into_iter().map(|n| n.key).collect();
            let b: Vec<String> = scaled.most_similar("k0000", 10).unwrap().into_iter().map(|n| n.key).collect();
            prop_assert_eq!(a, b);
        }
    }
}
