//! Synthetic corpora with a controllable amount of per-author signal.
//!
//! Every author draws tokens from a shared Zipfian background vocabulary
//! and, with probability `author_weight`, from a private Zipfian vocabulary
//! of `vocab_per_author` words. Setting either of those to zero removes all
//! author signal.

use chrono::{NaiveDate, TimeZone, Utc};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::posts::RawPost;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_authors: usize,
    pub posts_per_author: usize,
    /// Mean post length; lengths vary uniformly by a third either way.
    pub tokens_per_post: usize,
    pub vocab_shared: usize,
    pub vocab_per_author: usize,
    pub zipf_s: f64,
    /// Probability that a token comes from the author's private vocabulary.
    pub author_weight: f64,
    /// Posts are spread evenly over this many consecutive years.
    pub years: usize,
    pub start_year: i32,
    /// The first `round(fraction * n_authors)` authors write only
    /// `low_activity_posts` posts.
    pub low_activity_fraction: f64,
    pub low_activity_posts: usize,
    /// Probability that a post opens with an @mention.
    pub mention_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_authors: 100,
            posts_per_author: 1000,
            tokens_per_post: 15,
            vocab_shared: 5000,
            vocab_per_author: 50,
            zipf_s: 1.0,
            author_weight: 0.2,
            years: 1,
            start_year: 2015,
            low_activity_fraction: 0.0,
            low_activity_posts: 20,
            mention_rate: 0.05,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        let counts = [
            ("n_authors", self.n_authors),
            ("posts_per_author", self.posts_per_author),
            ("tokens_per_post", self.tokens_per_post),
            ("vocab_shared", self.vocab_shared),
            ("years", self.years),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(format!("{name} must be >= 1"));
            }
        }
        for (name, p) in [
            ("author_weight", self.author_weight),
            ("low_activity_fraction", self.low_activity_fraction),
            ("mention_rate", self.mention_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0, 1]"));
            }
        }
        if !(self.zipf_s >= 0.0 && self.zipf_s.is_finite()) {
            return Err("zipf_s must be finite and >= 0".into());
        }
        if self.low_activity_fraction > 0.0 && self.low_activity_posts == 0 {
            return Err("low_activity_posts must be >= 1".into());
        }
        Ok(())
    }

    pub fn n_low_activity(&self) -> usize {
        (self.low_activity_fraction * self.n_authors as f64).round() as usize
    }

    pub fn posts_for(&self, author: usize) -> usize {
        if author < self.n_low_activity() {
            self.low_activity_posts
        } else {
            self.posts_per_author
        }
    }

    pub fn author_id(&self, author: usize) -> String {
        format!("u{author:04}")
    }
}

fn zipf(n: usize, s: f64) -> Option<WeightedIndex<f64>> {
    WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-s))).ok()
}

/// Posts grouped by author, each author's posts in chronological order.
pub fn generate(config: &SynthConfig) -> Result<Vec<RawPost>, String> {
    config.validate()?;
    let shared = zipf(config.vocab_shared, config.zipf_s).expect("vocab_shared >= 1");
    let private = zipf(config.vocab_per_author, config.zipf_s);
    let jitter = config.tokens_per_post / 3;
    let mut posts = Vec::new();

    for author in 0..config.n_authors {
        let mut rng = stylo_core::seeded_rng(config.seed, author as u64);
        let id = config.author_id(author);
        let n_posts = config.posts_for(author);
        for p in 0..n_posts {
            let len = rng.gen_range(config.tokens_per_post - jitter..=config.tokens_per_post + jitter);
            let mut words = Vec::with_capacity(len + 1);
            if rng.gen_bool(config.mention_rate) {
                words.push(format!("@u{:04}", rng.gen_range(0..config.n_authors)));
            }
            for _ in 0..len {
                let word = match &private {
                    Some(private) if rng.gen_bool(config.author_weight) => format!("a{author}x{}", private.sample(&mut rng)),
                    _ => format!("w{}", shared.sample(&mut rng)),
                };
                words.push(word);
            }
            if rng.gen_bool(0.1) {
                words[0] = words[0].to_uppercase();
            }

            let year = config.start_year + (p * config.years / n_posts) as i32;
            let date = NaiveDate::from_ymd_opt(year, rng.gen_range(1..=12), rng.gen_range(1..=28)).expect("valid day");
            let time = date.and_hms_opt(rng.gen_range(0..24), rng.gen_range(0..60), rng.gen_range(0..60)).expect("valid time");
            posts.push(RawPost {
                author_id: id.clone(),
                timestamp: Utc.from_utc_datetime(&time),
                text: words.join(" "),
            });
        }
    }
    Ok(posts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stylo_core::corpus::{normalize_and_tokenize, SplitPolicy};

    fn small() -> SynthConfig {
        SynthConfig {
            n_authors: 5,
            posts_per_author: 30,
            vocab_shared: 100,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn line_count() {
        assert_eq!(generate(&small()).unwrap().len(), 150);
        let mixed = SynthConfig {
            low_activity_fraction: 0.4,
            low_activity_posts: 3,
            ..small()
        };
        assert_eq!(generate(&mixed).unwrap().len(), 2 * 3 + 3 * 30);
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SynthConfig { seed: 2, ..small() };
        assert_ne!(generate(&small()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn years_spread_evenly() {
        let cfg = SynthConfig { years: 3, ..small() };
        let posts = generate(&cfg).unwrap();
        let tokenized: Vec<_> = posts.iter().map(|p| p.tokenize(Default::default())).collect();
        let agg = stylo_core::corpus::aggregate(&tokenized, SplitPolicy::ByYear).unwrap();
        assert_eq!(agg.documents.len(), 15);
        assert!(agg.documents.iter().all(|d| d.post_count == 10));
    }

    #[test]
    fn no_private_words_without_signal() {
        let cfg = SynthConfig { vocab_per_author: 0, ..small() };
        for p in generate(&cfg).unwrap() {
            assert!(normalize_and_tokenize(&p.text).iter().all(|t| t.starts_with('w')));
        }
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(generate(&SynthConfig { n_authors: 0, ..small() }).is_err());
        assert!(generate(&SynthConfig { author_weight: 1.5, ..small() }).is_err());
    }
}
