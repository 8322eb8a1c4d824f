//! Text normalization and aggregation of posts into author documents.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{seeded_rng, Error, Result};

/// Options for [`normalize_and_tokenize_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerOptions {
    /// Drop tokens that are exactly `rt` after lowercasing.
    pub drop_rt: bool,
}

/// Lowercase, split on whitespace and drop `@` mentions.
///
/// Everything else (URLs, hashtags, punctuation) is kept as-is.
pub fn normalize_and_tokenize(text: &str) -> Vec<String> {
    normalize_and_tokenize_with(text, TokenizerOptions::default())
}

pub fn normalize_and_tokenize_with(text: &str, options: TokenizerOptions) -> Vec<String> {
    text.split_whitespace()
        .filter(|tok| !tok.starts_with('@'))
        .map(str::to_lowercase)
        .filter(|tok| !(options.drop_rt && tok == "rt"))
        .collect()
}

/// One post after normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedPost {
    pub author_id: String,
    pub year: i32,
    pub tokens: Vec<String>,
}

impl TokenizedPost {
    pub fn new(author_id: impl Into<String>, year: i32, text: &str, options: TokenizerOptions) -> Self {
        TokenizedPost {
            author_id: author_id.into(),
            year,
            tokens: normalize_and_tokenize_with(text, options),
        }
    }
}

/// All tokens attributed to one key, in post order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorDocument {
    pub key: String,
    pub tokens: Vec<String>,
    pub post_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitPolicy {
    /// One document per author.
    Whole,
    /// Two random halves per author, keyed `<id>_A` and `<id>_B`.
    HalfAB { seed: u64 },
    /// One document per (author, year), keyed `<id>_<year>`.
    ByYear,
}

/// Documents produced by [`aggregate`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Aggregation {
    /// Sorted by key.
    pub documents: Vec<AuthorDocument>,
    /// Posts skipped because nothing survived tokenization.
    pub empty_posts: usize,
    /// Authors with no usable document under the policy.
    pub dropped_authors: Vec<String>,
}

/// Split posts into halves A and B: a seeded shuffle, then the first
/// `ceil(n/2)` shuffled posts go to A. Both halves keep input order.
pub fn split_half<T: Clone>(posts: &[T], seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if posts.is_empty() {
        return Err(Error::EmptyAuthor(String::new()));
    }
    let n = posts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed, 0));
    let mut in_a = alloc::vec![false; n];
    for &i in &order[..n.div_ceil(2)] {
        in_a[i] = true;
    }
    let (mut a, mut b) = (Vec::with_capacity(n.div_ceil(2)), Vec::with_capacity(n / 2));
    for (post, &to_a) in posts.iter().zip(&in_a) {
        if to_a {
            a.push(post.clone());
        } else {
            b.push(post.clone());
        }
    }
    Ok((a, b))
}

/// Seed for one author's split: the run seed mixed with an FNV-1a hash of
/// the id, so adding authors never reshuffles existing ones.
fn author_seed(seed: u64, author_id: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in author_id.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ hash
}

fn concat(key: String, posts: &[&TokenizedPost]) -> AuthorDocument {
    let tokens = posts.iter().flat_map(|p| p.tokens.iter().cloned()).collect();
    AuthorDocument {
        key,
        tokens,
        post_count: posts.len() as u32,
    }
}

/// Group posts by author under `policy`.
///
/// Posts that tokenized to nothing are skipped. Under `HalfAB` an author
/// needs at least two non-empty posts, otherwise it is dropped.
pub fn aggregate(posts: &[TokenizedPost], policy: SplitPolicy) -> Result<Aggregation> {
    let mut by_author: BTreeMap<&str, Vec<&TokenizedPost>> = BTreeMap::new();
    let mut empty_posts = 0;
    let mut seen_authors: BTreeSet<&str> = BTreeSet::new();
    for post in posts {
        seen_authors.insert(&post.author_id);
        if post.tokens.is_empty() {
            empty_posts += 1;
            continue;
        }
        by_author.entry(&post.author_id).or_default().push(post);
    }

    let mut documents = Vec::new();
    let mut dropped_authors: Vec<String> = seen_authors
        .iter()
        .filter(|a| !by_author.contains_key(*a))
        .map(|a| a.to_string())
        .collect();

    for (author, author_posts) in &by_author {
        match policy {
            SplitPolicy::Whole => documents.push(concat(author.to_string(), author_posts)),
            SplitPolicy::HalfAB { seed } => {
                if author_posts.len() < 2 {
                    dropped_authors.push(author.to_string());
                    continue;
                }
                let (a, b) = split_half(author_posts, author_seed(seed, author))?;
                documents.push(concat(format!("{author}_A"), &a));
                documents.push(concat(format!("{author}_B"), &b));
            }
            SplitPolicy::ByYear => {
                let mut years: BTreeMap<i32, Vec<&TokenizedPost>> = BTreeMap::new();
                for post in author_posts {
                    years.entry(post.year).or_default().push(post);
                }
                for (year, year_posts) in years {
                    documents.push(concat(format!("{author}_{year}"), &year_posts));
                }
            }
        }
    }

    documents.sort_by(|a, b| a.key.cmp(&b.key));
    ensure_unique_keys(&documents)?;
    dropped_authors.sort();
    Ok(Aggregation {
        documents,
        empty_posts,
        dropped_authors,
    })
}

/// Fails with the duplicated keys if any key occurs twice.
pub fn ensure_unique_keys(documents: &[AuthorDocument]) -> Result<()> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for doc in documents {
        if !seen.insert(doc.key.as_str()) {
            dups.insert(doc.key.clone());
        }
    }
    if dups.is_empty() {
        Ok(())
    } else {
        Err(Error::DuplicateKeys(dups.into_iter().collect()))
    }
}
