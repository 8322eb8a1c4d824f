//! JSON and TSV renderings of evaluation and clustering results.

use std::fmt::Write as _;

use serde::Serialize;
use stylo_core::cluster::{ClusterSummary, Clustering};
use stylo_core::eval::{ActivityRow, EvalReport, SweepPoint};

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

/// Header plus one summary row.
pub fn eval_tsv(report: &EvalReport) -> String {
    format!(
        "protocol\tk\tn_authors\tpositives\taccuracy\twall_time_secs\n{}\t{}\t{}\t{}\t{}\t{}\n",
        report.protocol,
        report.k,
        report.n_authors,
        report.positives,
        report.accuracy,
        opt(report.wall_time_secs)
    )
}

/// Empty buckets print `NA`.
pub fn activity_tsv(rows: &[ActivityRow]) -> String {
    let mut s = String::from("min_posts\tn_authors\taccuracy\tn_below\taccuracy_below\n");
    for r in rows {
        writeln!(s, "{}\t{}\t{}\t{}\t{}", r.min_posts, r.n_authors, opt(r.accuracy), r.n_below, opt(r.accuracy_below)).unwrap();
    }
    s
}

/// `D<TAB>accuracy`, with `NA` for dimensions whose training failed.
pub fn sweep_tsv(points: &[SweepPoint]) -> String {
    let mut s = String::from("D\taccuracy\n");
    for p in points {
        writeln!(s, "{}\t{}", p.dim, opt(p.result.as_ref().ok().map(|r| r.accuracy))).unwrap();
    }
    s
}

#[derive(Serialize)]
pub struct SweepEntry<'a> {
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<&'a EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn sweep_json(points: &[SweepPoint]) -> String {
    let entries: Vec<SweepEntry> = points
        .iter()
        .map(|p| SweepEntry {
            dim: p.dim,
            report: p.result.as_ref().ok(),
            error: p.result.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    to_json(&entries)
}

/// `key<TAB>cluster_id`, in key order.
pub fn clusters_tsv(clustering: &Clustering) -> String {
    let mut rows: Vec<(&str, usize)> = clustering.keys.iter().map(String::as_str).zip(clustering.assignments.iter().copied()).collect();
    rows.sort();
    let mut s = String::new();
    for (key, c) in rows {
        writeln!(s, "{key}\t{c}").unwrap();
    }
    s
}

#[derive(Serialize)]
pub struct ClusterReport<'a> {
    pub k: usize,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    pub inertia_history: &'a [f64],
    pub clusters: &'a [ClusterSummary],
}

pub fn cluster_json(clustering: &Clustering, summaries: &[ClusterSummary]) -> String {
    to_json(&ClusterReport {
        k: clustering.k,
        inertia: clustering.inertia,
        iterations: clustering.iterations,
        converged: clustering.converged,
        inertia_history: &clustering.inertia_history,
        clusters: summaries,
    })
}
