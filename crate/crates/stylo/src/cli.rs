//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use stylo_core::cluster::{cluster_report, kmeans};
use stylo_core::corpus::{aggregate, normalize_and_tokenize_with, AuthorDocument};
use stylo_core::eval::{activity_breakdown, dimension_sweep, split_half_eval, temporal_eval, EvalReport};
use stylo_core::index::SimilarityIndex;
use stylo_core::pvdm::{infer_vector, Model};

use crate::config::{resolve, ExportSet, Overrides, RunConfig, SEED_ENV};
use crate::model_io::{self, VectorSet};
use crate::posts::{read_posts, write_posts_jsonl};
use crate::{corpus_file, hogwild, report, synth, Result, StyloError};

#[derive(Debug, Parser)]
#[command(name = "stylo", version, about = "Author style fingerprints from short texts")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Read raw posts and write an aggregated corpus.
    Ingest,
    /// Generate a synthetic post file.
    Synth,
    /// Train a model on a corpus.
    Train,
    /// Evaluate a model.
    Eval {
        #[command(subcommand)]
        protocol: Protocol,
    },
    /// Nearest authors to a stored key or to new text.
    Query,
    /// Spherical k-means over author fingerprints.
    Cluster,
    /// Write vectors or the vocabulary as text.
    Export,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Protocol {
    /// Query each `<id>_A` against all other halves.
    SplitHalf,
    /// Query each `<id>_<year>` against strictly earlier years.
    Temporal,
    /// Train and run split-half once per dimension.
    Sweep,
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| StyloError::Usage(format!("--{flag} is required")))
}

fn existing<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let path = required(value, flag)?;
    if !path.exists() {
        return Err(StyloError::MissingFile(path.clone()));
    }
    Ok(path)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| StyloError::io(path, e))
}

/// Write to `path`, or to stdout when absent.
fn emit(path: Option<&PathBuf>, contents: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => out.write_all(contents.as_bytes()).map_err(|e| StyloError::io("<stdout>", e)),
    }
}

fn load_model(config: &RunConfig) -> Result<Model> {
    let path = existing(&config.model, "model")?;
    model_io::load_model(path).map_err(|e| match e {
        model_io::ModelFileError::Io(io) => StyloError::io(path, io),
        other => other.into(),
    })
}

fn load_corpus(config: &RunConfig) -> Result<Vec<AuthorDocument>> {
    corpus_file::read_corpus(existing(&config.corpus, "corpus")?)
}

fn cmd_ingest(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let input = existing(&config.input, "input")?;
    let output = required(&config.output, "output")?;
    let read = read_posts(input, config.format)?;
    let tokenized: Vec<_> = read.posts.iter().map(|p| p.tokenize(config.tokenizer())).collect();
    let agg = aggregate(&tokenized, config.split_policy())?;
    corpus_file::write_corpus(output, &agg.documents)?;
    writeln!(
        out,
        "posts={} skipped={} empty_posts={} documents={} dropped_authors={}",
        read.posts.len(),
        read.skipped,
        agg.empty_posts,
        agg.documents.len(),
        agg.dropped_authors.len()
    )
    .ok();
    Ok(())
}

fn cmd_synth(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let output = required(&config.output, "output")?;
    let posts = synth::generate(&config.synth_config()).map_err(StyloError::Config)?;
    write_posts_jsonl(output, &posts)?;
    writeln!(out, "posts={}", posts.len()).ok();
    Ok(())
}

fn cmd_train(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let documents = load_corpus(config)?;
    let path = required(&config.model, "model")?;
    let start = Instant::now();
    let (model, stats) = hogwild::train(&documents, config.train_config())?;
    model_io::save_model(&model, path).map_err(|e| match e {
        model_io::ModelFileError::Io(io) => StyloError::io(path, io),
        other => other.into(),
    })?;
    for (e, loss) in stats.epoch_mean_loss.iter().enumerate() {
        writeln!(out, "epoch={} mean_loss={loss} examples={}", e + 1, stats.epoch_examples[e]).ok();
    }
    writeln!(
        out,
        "documents={} vocab={} wall_time_secs={:.3}",
        model.doc_keys.len(),
        model.vocab.len(),
        start.elapsed().as_secs_f64()
    )
    .ok();
    Ok(())
}

fn write_eval(config: &RunConfig, report: &EvalReport, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "accuracy={}", report.accuracy).ok();
    writeln!(out, "n_authors={} positives={} k={}", report.n_authors, report.positives, report.k).ok();
    if let Some(p) = &config.report {
        write_file(p, &report::to_json(report))?;
    }
    if let Some(p) = &config.report_tsv {
        write_file(p, &report::eval_tsv(report))?;
    }
    if !config.activity.is_empty() {
        let rows = activity_breakdown(report, &config.activity);
        let tsv = report::activity_tsv(&rows);
        match &config.activity_tsv {
            Some(p) => write_file(p, &tsv)?,
            None => out.write_all(tsv.as_bytes()).map_err(|e| StyloError::io("<stdout>", e))?,
        }
    }
    Ok(())
}

fn cmd_eval(config: &RunConfig, protocol: Protocol, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    match protocol {
        Protocol::SplitHalf | Protocol::Temporal => {
            let model = load_model(config)?;
            let index = SimilarityIndex::from_model(&model)?;
            let mut report = match protocol {
                Protocol::SplitHalf => split_half_eval(&index, config.k)?,
                _ => temporal_eval(&index, config.k)?,
            };
            report.config = Some(model.config);
            report.wall_time_secs = Some(start.elapsed().as_secs_f64());
            write_eval(config, &report, out)
        }
        Protocol::Sweep => {
            let documents = load_corpus(config)?;
            let mut points = dimension_sweep(&documents, &config.dims, config.train_config(), config.k, |docs, c| {
                let t = Instant::now();
                hogwild::train(docs, c).map(|(m, _)| {
                    writeln!(out, "trained D={} in {:.3}s", c.dim, t.elapsed().as_secs_f64()).ok();
                    m
                })
            })?;
            for p in &mut points {
                match &mut p.result {
                    Ok(r) => {
                        r.wall_time_secs = Some(start.elapsed().as_secs_f64());
                        writeln!(out, "D={} accuracy={}", p.dim, r.accuracy).ok();
                    }
                    Err(e) => {
                        writeln!(out, "D={} error={e}", p.dim).ok();
                    }
                }
            }
            let tsv = report::sweep_tsv(&points);
            if let Some(p) = &config.report {
                write_file(p, &report::sweep_json(&points))?;
            }
            emit(config.report_tsv.as_ref(), &tsv, out)
        }
    }
}

fn cmd_query(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let model = load_model(config)?;
    let index = SimilarityIndex::from_model(&model)?;
    let neighbors = match (&config.key, &config.text) {
        (Some(key), None) => index.most_similar(key, config.top)?,
        (None, Some(text)) => {
            let tokens = normalize_and_tokenize_with(text, config.tokenizer());
            let v = infer_vector(&tokens, &model, config.infer_steps, config.infer_lr, config.seed)?;
            index.most_similar_to(&v, config.top)?
        }
        _ => return Err(StyloError::Usage("exactly one of --key and --text is required".into())),
    };
    for (rank, n) in neighbors.iter().enumerate() {
        writeln!(out, "{} {} {}", rank + 1, n.key, n.score).ok();
    }
    Ok(())
}

fn cmd_cluster(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let model = load_model(config)?;
    let documents = match &config.corpus {
        Some(_) => load_corpus(config)?,
        None => Vec::new(),
    };
    let index = SimilarityIndex::from_model(&model)?;
    let clustering = kmeans(&index, config.clusters, config.seed, config.max_iters)?;
    let summaries = cluster_report(&clustering, &index, &documents, config.top_tokens);
    if let Some(p) = &config.report {
        write_file(p, &report::cluster_json(&clustering, &summaries))?;
    }
    emit(config.output.as_ref(), &report::clusters_tsv(&clustering), out)
}

fn cmd_export(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let model = load_model(config)?;
    let mut buf = Vec::new();
    let written = match config.vectors {
        ExportSet::Vocab => model_io::write_vocab_tsv(&mut buf, &model.vocab),
        ExportSet::Docs => model_io::write_text_vectors(&mut buf, &model, VectorSet::Docs),
        ExportSet::Fingerprints => model_io::write_text_vectors(&mut buf, &model, VectorSet::Fingerprints),
        ExportSet::Words => model_io::write_text_vectors(&mut buf, &model, VectorSet::Words),
    };
    written.expect("writing to memory cannot fail");
    match &config.output {
        Some(p) => std::fs::write(p, &buf).map_err(|e| StyloError::io(p, e)),
        None => out.write_all(&buf).map_err(|e| StyloError::io("<stdout>", e)),
    }
}

pub fn run(cli: Cli, env_seed: Option<&str>, out: &mut dyn Write) -> Result<()> {
    if let Some(path) = &cli.config {
        if !path.exists() {
            return Err(StyloError::MissingFile(path.clone()));
        }
    }
    let config = resolve(cli.config.as_deref(), env_seed, cli.overrides)?;
    if cli.print_config {
        writeln!(out, "{}", config.to_json()).ok();
        return Ok(());
    }
    match cli.command {
        None => Err(StyloError::Usage("a subcommand is required".into())),
        Some(Command::Ingest) => cmd_ingest(&config, out),
        Some(Command::Synth) => cmd_synth(&config, out),
        Some(Command::Train) => cmd_train(&config, out),
        Some(Command::Eval { protocol }) => cmd_eval(&config, protocol, out),
        Some(Command::Query) => cmd_query(&config, out),
        Some(Command::Cluster) => cmd_cluster(&config, out),
        Some(Command::Export) => cmd_export(&config, out),
    }
}

/// `stylo: error code=<n> kind=<kind>: <message>` on one line.
pub fn error_line(kind: &str, code: i32, message: &str) -> String {
    let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("stylo: error code={code} kind={kind}: {message}")
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                write!(out, "{}", e.render()).ok();
                return 0;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            writeln!(err, "{}", error_line("usage", 2, first)).ok();
            return 2;
        }
    };
    match run(cli, env_seed, out) {
        Ok(()) => 0,
        // A closed stdout (`stylo export | head`) is not a failure.
        Err(StyloError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let kind = e.kind();
            writeln!(err, "{}", error_line(kind.name(), kind.exit_code(), &e.to_string())).ok();
            kind.exit_code()
        }
    }
}

pub fn main() -> i32 {
    let env_seed = std::env::var(SEED_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    main_with(std::env::args_os(), env_seed.as_deref(), &mut stdout.lock(), &mut stderr.lock())
}
