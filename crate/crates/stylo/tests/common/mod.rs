#![allow(dead_code)]

use stylo::synth::{generate, SynthConfig};
use stylo_core::corpus::{aggregate, AuthorDocument, SplitPolicy, TokenizerOptions};

pub fn documents(config: &SynthConfig, policy: SplitPolicy) -> Vec<AuthorDocument> {
    let posts = generate(config).unwrap();
    let tokenized: Vec<_> = posts.iter().map(|p| p.tokenize(TokenizerOptions::default())).collect();
    aggregate(&tokenized, policy).unwrap().documents
}

pub fn small_synth(n_authors: usize, posts_per_author: usize) -> SynthConfig {
    SynthConfig {
        n_authors,
        posts_per_author,
        vocab_shared: 500,
        vocab_per_author: 20,
        ..SynthConfig::default()
    }
}
