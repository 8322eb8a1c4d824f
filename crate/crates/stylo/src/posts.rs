//! Raw post records in JSONL or TSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use stylo_core::corpus::{TokenizedPost, TokenizerOptions};

use crate::{Result, StyloError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(format!("unknown format {other:?} (expected jsonl or tsv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub author_id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
}

impl RawPost {
    pub fn year(&self) -> i32 {
        self.timestamp.year()
    }

    pub fn tokenize(&self, options: TokenizerOptions) -> TokenizedPost {
        TokenizedPost::new(self.author_id.clone(), self.year(), &self.text, options)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadOutcome {
    pub posts: Vec<RawPost>,
    pub skipped: usize,
}

#[derive(Deserialize)]
struct JsonRecord {
    author: String,
    ts: String,
    text: String,
}

#[derive(Serialize)]
struct JsonRecordRef<'a> {
    author: &'a str,
    ts: String,
    text: &'a str,
}

/// RFC 3339, a naive `YYYY-MM-DD[T ]HH:MM:SS` taken as UTC, or a bare date.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

fn make_post(author: &str, ts: &str, text: String) -> Option<RawPost> {
    let author_id = author.trim();
    if author_id.is_empty() {
        return None;
    }
    Some(RawPost {
        author_id: author_id.to_string(),
        timestamp: parse_timestamp(ts)?,
        text,
    })
}

pub fn parse_line(line: &str, format: InputFormat) -> Option<RawPost> {
    match format {
        InputFormat::Jsonl => {
            let r: JsonRecord = serde_json::from_str(line).ok()?;
            make_post(&r.author, &r.ts, r.text)
        }
        InputFormat::Tsv => {
            let mut fields = line.splitn(3, '\t');
            let (author, ts, text) = (fields.next()?, fields.next()?, fields.next()?);
            make_post(author, ts, text.to_string())
        }
    }
}

/// Parse every nonblank line; malformed records are skipped and counted.
/// Fails when more than half of the records are malformed.
pub fn parse_posts<R: BufRead>(reader: R, format: InputFormat, path: &Path) -> Result<ReadOutcome> {
    let mut posts = Vec::new();
    let mut skipped = 0;
    for line in reader.lines() {
        let line = line.map_err(|e| StyloError::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, format) {
            Some(p) => posts.push(p),
            None => skipped += 1,
        }
    }
    if skipped * 2 > posts.len() + skipped {
        return Err(StyloError::Format {
            path: path.to_path_buf(),
            message: format!("{skipped} of {} records malformed", posts.len() + skipped),
        });
    }
    Ok(ReadOutcome { posts, skipped })
}

pub fn read_posts(path: &Path, format: InputFormat) -> Result<ReadOutcome> {
    let file = File::open(path).map_err(|e| StyloError::io(path, e))?;
    parse_posts(BufReader::new(file), format, path)
}

pub fn write_posts_jsonl(path: &Path, posts: &[RawPost]) -> Result<()> {
    let io = |e| StyloError::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for p in posts {
        let rec = JsonRecordRef {
            author: &p.author_id,
            ts: p.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            text: &p.text,
        };
        serde_json::to_writer(&mut out, &rec).expect("serializing strings cannot fail");
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}
