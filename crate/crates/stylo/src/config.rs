//! The run configuration shared by every subcommand.
//!
//! Resolution order, later wins: built-in defaults, the JSON file given by
//! `--config`, the `STYLO_SEED` environment variable, command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use stylo_core::corpus::{SplitPolicy, TokenizerOptions};
use stylo_core::pvdm::TrainConfig;

use crate::posts::InputFormat;
use crate::synth::SynthConfig;
use crate::{Result, StyloError};

pub const SEED_ENV: &str = "STYLO_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Whole,
    Half,
    Year,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExportSet {
    /// Raw author vectors.
    Docs,
    /// Unit-normalized author vectors.
    Fingerprints,
    /// Word input vectors.
    Words,
    /// `word<TAB>count` table.
    Vocab,
}

// Declares `RunConfig` and the matching `Overrides` flag set from one list,
// so no field can lack a flag. Each entry is
// `name: config type = default, flag value type, [extra clap attributes]`.
macro_rules! run_config {
    ($( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr, $flag:ty, [$($attr:tt)*] );* $(;)?) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct RunConfig {
            $( $(#[doc = $doc])* pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $( $field: $default, )* }
            }
        }

        /// One long flag per [`RunConfig`] field.
        #[derive(Debug, Clone, Default, clap::Args)]
        pub struct Overrides {
            $( $(#[doc = $doc])* #[arg(long, global = true, $($attr)*)] pub $field: Option<$flag>, )*
        }

        impl Overrides {
            pub fn apply(self, config: &mut RunConfig) {
                $( if let Some(v) = self.$field { config.$field = v.into(); } )*
            }
        }
    };
}

run_config! {
    /// Embedding dimension D.
    dim: usize = 100, usize, [];
    /// Maximum context radius c.
    window: usize = 5, usize, [];
    /// Negative samples K per example.
    negatives: usize = 5, usize, [];
    epochs: usize = 10, usize, [];
    /// Initial learning rate.
    lr0: f64 = 0.025, f64, [];
    /// Learning-rate floor.
    lr_min: f64 = 0.0001, f64, [];
    /// Subsampling threshold, 0 disables.
    subsample: f64 = 1e-3, f64, [];
    min_count: u64 = 5, u64, [];
    /// Seed for every random choice of the run.
    seed: u64 = 1, u64, [];
    /// Training threads; results are bit-reproducible only with 1.
    workers: usize = 1, usize, [];

    /// Raw post file for ingest.
    input: Option<PathBuf> = None, PathBuf, [];
    format: InputFormat = InputFormat::Jsonl, InputFormat, [];
    split: Split = Split::Half, Split, [value_enum];
    /// Drop the exact token "rt".
    drop_rt: bool = false, bool, [num_args = 0..=1, default_missing_value = "true"];
    /// Output of ingest, synth, cluster and export.
    output: Option<PathBuf> = None, PathBuf, [];
    /// Aggregated corpus written by ingest.
    corpus: Option<PathBuf> = None, PathBuf, [];
    /// Model file, written by train and read by everything after it.
    model: Option<PathBuf> = None, PathBuf, [];

    /// Positive if the counterpart is within the top k.
    k: usize = 1, usize, [];
    /// JSON report path.
    report: Option<PathBuf> = None, PathBuf, [];
    /// TSV summary path.
    report_tsv: Option<PathBuf> = None, PathBuf, [];
    /// Post-count thresholds for the activity breakdown, comma separated.
    activity: Vec<u32> = Vec::new(), Vec<u32>, [value_delimiter = ','];
    /// Activity breakdown TSV path.
    activity_tsv: Option<PathBuf> = None, PathBuf, [];
    /// Dimensions for the sweep, comma separated.
    dims: Vec<usize> = vec![10, 50, 100, 200], Vec<usize>, [value_delimiter = ','];

    /// Query by stored key.
    key: Option<String> = None, String, [];
    /// Query by raw text, inferring a vector for it.
    text: Option<String> = None, String, [];
    top: usize = 10, usize, [];
    infer_steps: usize = 50, usize, [];
    infer_lr: f64 = 0.025, f64, [];

    /// Number of clusters.
    clusters: usize = 8, usize, [];
    max_iters: usize = 100, usize, [];
    /// Distinguishing tokens listed per cluster.
    top_tokens: usize = 10, usize, [];

    vectors: ExportSet = ExportSet::Fingerprints, ExportSet, [value_enum];

    n_authors: usize = 100, usize, [];
    posts_per_author: usize = 1000, usize, [];
    tokens_per_post: usize = 15, usize, [];
    vocab_shared: usize = 5000, usize, [];
    vocab_per_author: usize = 50, usize, [];
    zipf_s: f64 = 1.0, f64, [];
    /// Share of tokens drawn from an author's private vocabulary.
    author_weight: f64 = 0.2, f64, [];
    years: usize = 1, usize, [];
    start_year: i32 = 2015, i32, [];
    low_activity_fraction: f64 = 0.0, f64, [];
    low_activity_posts: usize = 20, usize, [];
    mention_rate: f64 = 0.05, f64, [];
}

impl RunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            lr0: self.lr0,
            lr_min: self.lr_min,
            subsample: self.subsample,
            min_count: self.min_count,
            seed: self.seed,
            workers: self.workers,
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            n_authors: self.n_authors,
            posts_per_author: self.posts_per_author,
            tokens_per_post: self.tokens_per_post,
            vocab_shared: self.vocab_shared,
            vocab_per_author: self.vocab_per_author,
            zipf_s: self.zipf_s,
            author_weight: self.author_weight,
            years: self.years,
            start_year: self.start_year,
            low_activity_fraction: self.low_activity_fraction,
            low_activity_posts: self.low_activity_posts,
            mention_rate: self.mention_rate,
            seed: self.seed,
        }
    }

    pub fn split_policy(&self) -> SplitPolicy {
        match self.split {
            Split::Whole => SplitPolicy::Whole,
            Split::Half => SplitPolicy::HalfAB { seed: self.seed },
            Split::Year => SplitPolicy::ByYear,
        }
    }

    pub fn tokenizer(&self) -> TokenizerOptions {
        TokenizerOptions { drop_rt: self.drop_rt }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate().map_err(|e| StyloError::Config(e.to_string()))?;
        self.synth_config().validate().map_err(StyloError::Config)?;
        for (name, v) in [("k", self.k), ("top", self.top), ("clusters", self.clusters), ("max_iters", self.max_iters), ("infer_steps", self.infer_steps)] {
            if v == 0 {
                return Err(StyloError::Config(format!("{name} must be >= 1")));
            }
        }
        if !(self.infer_lr > 0.0 && self.infer_lr.is_finite()) {
            return Err(StyloError::Config("infer_lr must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| StyloError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| StyloError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Defaults, then the optional file, then `env_seed`, then `flags`.
pub fn resolve(file: Option<&Path>, env_seed: Option<&str>, flags: Overrides) -> Result<RunConfig> {
    let mut config = match file {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = env_seed {
        config.seed = s.trim().parse().map_err(|_| StyloError::Config(format!("{SEED_ENV}={s:?} is not a u64")))?;
    }
    flags.apply(&mut config);
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(c.train_config(), TrainConfig::default());
    }

    #[test]
    fn partial_file() {
        let c = RunConfig::from_json(r#"{"dim": 32, "split": "year"}"#).unwrap();
        assert_eq!(c.dim, 32);
        assert_eq!(c.split, Split::Year);
        assert_eq!(c.window, 5);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"dimm": 3}"#), Err(StyloError::Config(_))));
    }

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 5, "dim": 20}"#).unwrap();
        assert_eq!(resolve(Some(&path), None, Overrides::default()).unwrap().seed, 5);
        assert_eq!(resolve(Some(&path), Some("9"), Overrides::default()).unwrap().seed, 9);
        let flags = Overrides {
            seed: Some(11),
            ..Overrides::default()
        };
        let c = resolve(Some(&path), Some("9"), flags).unwrap();
        assert_eq!((c.seed, c.dim), (11, 20));
        assert!(resolve(Some(&path), Some("x"), Overrides::default()).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let flags = Overrides {
            dim: Some(0),
            ..Overrides::default()
        };
        assert!(matches!(resolve(None, None, flags), Err(StyloError::Config(_))));
    }
}
