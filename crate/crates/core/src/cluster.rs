//! Spherical k-means over fingerprints, for grouping authors into
//! sociolect clusters.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AuthorDocument;
use crate::index::SimilarityIndex;
use crate::{seeded_rng, Error, Result};

/// Tokens rarer than this across the corpus are never reported as
/// distinguishing.
pub const MIN_GLOBAL_COUNT: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    /// Aligned with `assignments`.
    pub keys: Vec<String>,
    pub assignments: Vec<usize>,
    /// Unit-norm centroids.
    pub centroids: Vec<Vec<f64>>,
    /// Sum of `1 - cos` to the assigned centroid.
    pub inertia: f64,
    /// Inertia after every assignment step, initial one included.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Clustering {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn cluster_of(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k == key).map(|i| self.assignments[i])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> bool {
    let n = Float::sqrt(dot(v, v));
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Best centroid per point (ties go to the lower id) and the inertia.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], out: &mut [usize], best_cos: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (mut best, mut best_c) = (0, f64::NEG_INFINITY);
        for (c, centroid) in centroids.iter().enumerate() {
            let s = dot(p, centroid);
            if s > best_c {
                best = c;
                best_c = s;
            }
        }
        out[i] = best;
        best_cos[i] = best_c;
        inertia += (1.0 - best_c).max(0.0);
    }
    inertia
}

/// k-means++ seeding with `1 - cos` as the distance.
fn seed_centroids<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.gen_range(0..n));
    let mut dist: Vec<f64> = points.iter().map(|p| (1.0 - dot(p, &points[chosen[0]])).max(0.0)).collect();
    dist[chosen[0]] = 0.0;
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            if dist[pick] == 0.0 {
                pick = dist.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // Every remaining point coincides with a centroid.
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            dist[i] = dist[i].min((1.0 - dot(p, &points[next])).max(0.0));
        }
        dist[next] = 0.0;
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Spherical k-means with k-means++ seeding.
///
/// A cluster that ends up empty is re-seeded on the point farthest from its
/// own centroid.
pub fn kmeans(index: &SimilarityIndex, k: usize, seed: u64, max_iters: usize) -> Result<Clustering> {
    let n = index.len();
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v: Vec<f64> = index.vector(i).iter().map(|&x| f64::from(x)).collect();
            normalize(&mut v);
            v
        })
        .collect();
    let mut rng = seeded_rng(seed, 0);
    let mut centroids = seed_centroids(&points, k, &mut rng);
    let mut assignments = alloc::vec![0; n];
    let mut best_cos = alloc::vec![0.0; n];
    let mut inertia = assign(&points, &centroids, &mut assignments, &mut best_cos);
    let mut history = alloc::vec![inertia];
    let mut iterations = 0;
    let mut converged = false;
    let dim = index.dim();

    while iterations < max_iters {
        iterations += 1;
        let mut sums = alloc::vec![alloc::vec![0.0; dim]; k];
        for (p, &c) in points.iter().zip(&assignments) {
            sums[c].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        let mut reseeded = Vec::new();
        for (c, mut sum) in sums.into_iter().enumerate() {
            if normalize(&mut sum) {
                centroids[c] = sum;
            } else {
                let far = (0..n)
                    .filter(|i| !reseeded.contains(i))
                    .min_by(|&a, &b| best_cos[a].total_cmp(&best_cos[b]).then(a.cmp(&b)))
                    .expect("k <= n");
                reseeded.push(far);
                centroids[c] = points[far].clone();
            }
        }
        let previous = assignments.clone();
        inertia = assign(&points, &centroids, &mut assignments, &mut best_cos);
        history.push(inertia);
        if assignments == previous {
            converged = true;
            break;
        }
    }

    Ok(Clustering {
        k,
        keys: index.keys().to_vec(),
        assignments,
        centroids,
        inertia,
        inertia_history: history,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctiveToken {
    pub token: String,
    /// In-cluster relative frequency over global relative frequency.
    pub ratio: f64,
    pub cluster_count: u64,
    pub global_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub size: usize,
    /// Member with the largest summed cosine to the other members, which for
    /// unit vectors is the member closest to the centroid.
    pub medoid: Option<String>,
    pub top_tokens: Vec<DistinctiveToken>,
}

/// Per-cluster size, medoid and most over-represented tokens.
pub fn cluster_report(clustering: &Clustering, index: &SimilarityIndex, documents: &[AuthorDocument], top_n: usize) -> Vec<ClusterSummary> {
    let docs: BTreeMap<&str, &AuthorDocument> = documents.iter().map(|d| (d.key.as_str(), d)).collect();
    let mut global: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in documents {
        for tok in &doc.tokens {
            *global.entry(tok.as_str()).or_default() += 1;
        }
    }
    let global_total: u64 = global.values().sum();

    (0..clustering.k)
        .map(|c| {
            let members: Vec<usize> = (0..clustering.keys.len()).filter(|&i| clustering.assignments[i] == c).collect();
            let centroid = &clustering.centroids[c];
            let medoid = members
                .iter()
                .filter_map(|&i| {
                    let pos = index.position(&clustering.keys[i])?;
                    let v: Vec<f64> = index.vector(pos).iter().map(|&x| f64::from(x)).collect();
                    Some((dot(&v, centroid), i))
                })
                .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
                .map(|(_, i)| clustering.keys[i].clone());

            let mut local: BTreeMap<&str, u64> = BTreeMap::new();
            for &i in &members {
                if let Some(doc) = docs.get(clustering.keys[i].as_str()) {
                    for tok in &doc.tokens {
                        *local.entry(tok.as_str()).or_default() += 1;
                    }
                }
            }
            let local_total: u64 = local.values().sum();
            let mut top_tokens: Vec<DistinctiveToken> = local
                .iter()
                .filter_map(|(&tok, &count)| {
                    let g = global[tok];
                    if g < MIN_GLOBAL_COUNT {
                        return None;
                    }
                    let ratio = (count as f64 / local_total as f64) / (g as f64 / global_total as f64);
                    Some(DistinctiveToken {
                        token: tok.to_string(),
                        ratio,
                        cluster_count: count,
                        global_count: g,
                    })
                })
                .collect();
            top_tokens.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then_with(|| a.token.cmp(&b.token)));
            top_tokens.truncate(top_n);

            ClusterSummary {
                cluster: c,
                size: members.len(),
                medoid,
                top_tokens,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_index(n: usize, dim: usize, seed: u64) -> SimilarityIndex {
        let mut rng = seeded_rng(seed, 9);
        let mut index = SimilarityIndex::new(dim);
        for i in 0..n {
            let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            index.insert(format!("p{i:03}"), &v, 1).unwrap();
        }
        index
    }

    /// Two tight groups around orthogonal directions.
    fn two_groups(per_group: usize, seed: u64) -> SimilarityIndex {
        let mut rng = seeded_rng(seed, 1);
        let mut index = SimilarityIndex::new(4);
        for g in 0..2 {
            for i in 0..per_group {
                let mut v = [0.0f32; 4];
                v[g * 2] = 1.0;
                v.iter_mut().for_each(|x| *x += rng.gen_range(-0.1..0.1));
                index.insert(format!("g{g}_{i:02}"), &v, 1).unwrap();
            }
        }
        index
    }

    #[test]
    fn k_equals_n() {
        let index = random_index(12, 5, 1);
        let c = kmeans(&index, 12, 3, 50).unwrap();
        assert!(c.inertia.abs() < 1e-12);
        let mut sizes = c.sizes();
        sizes.sort();
        assert_eq!(sizes, vec![1; 12]);
    }

    #[test]
    fn recovers_groups() {
        let index = two_groups(15, 4);
        let c = kmeans(&index, 2, 11, 100).unwrap();
        let first = c.cluster_of("g0_00").unwrap();
        for (key, &a) in c.keys.iter().zip(&c.assignments) {
            assert_eq!(a == first, key.starts_with("g0"), "{key}");
        }
        assert!(c.converged);
    }

    #[test]
    fn too_many_clusters() {
        let index = random_index(3, 2, 0);
        assert_eq!(kmeans(&index, 4, 0, 10), Err(Error::TooManyClusters { k: 4, n: 3 }));
        assert!(kmeans(&index, 0, 0, 10).is_err());
    }

    #[test]
    fn duplicates_with_k_equal_n() {
        let mut index = SimilarityIndex::new(2);
        for i in 0..4 {
            index.insert(format!("d{i}"), &[1.0, 1.0], 1).unwrap();
        }
        let c = kmeans(&index, 4, 0, 10).unwrap();
        assert_eq!(c.assignments.len(), 4);
        assert!(c.inertia.abs() < 1e-12);
    }

    #[test]
    fn report_single_cluster() {
        let index = two_groups(5, 2);
        let docs: Vec<AuthorDocument> = index
            .keys()
            .iter()
            .map(|k| {
                let mut tokens = vec![String::from("common"); 3];
                if k.starts_with("g0") {
                    tokens.extend(vec![String::from("zebra"); 3]);
                }
                AuthorDocument { key: k.clone(), tokens, post_count: 1 }
            })
            .collect();
        let c = kmeans(&index, 1, 0, 10).unwrap();
        let rows = cluster_report(&c, &index, &docs, 5);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].size, 10);
        assert!(rows[0].medoid.is_some());

        let c = kmeans(&index, 2, 0, 10).unwrap();
        let rows = cluster_report(&c, &index, &docs, 5);
        assert_eq!(rows.iter().map(|r| r.size).sum::<usize>(), 10);
        let g0 = c.cluster_of("g0_00").unwrap();
        assert_eq!(rows[g0].top_tokens[0].token, "zebra");
        assert!(rows[1 - g0].top_tokens.iter().all(|t| t.token != "zebra"));
    }

    proptest! {
        #[test]
        fn partition_and_monotone_inertia(seed in any::<u64>(), n in 2usize..40, k in 1usize..6) {
            let k = k.min(n);
            let index = random_index(n, 6, seed);
            let c = kmeans(&index, k, seed, 30).unwrap();
            prop_assert_eq!(c.assignments.len(), n);
            prop_assert_eq!(c.sizes().iter().sum::<usize>(), n);
            prop_assert!(c.assignments.iter().all(|&a| a < k));
            prop_assert!(c.iterations <= 30);
            prop_assert!(c.inertia >= 0.0);
            for w in c.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", c.inertia_history);
            }
            for centroid in &c.centroids {
                prop_assert!((dot(centroid, centroid) - 1.0).abs() < 1e-9);
            }
            prop_assert_eq!(kmeans(&index, k, seed, 30).unwrap(), c);
        }
    }
}
