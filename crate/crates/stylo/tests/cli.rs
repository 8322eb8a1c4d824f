use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_stylo");

fn stylo(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("STYLO_SEED").output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = stylo(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn error_line(out: &Output) -> String {
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    err.trim_end().to_string()
}

const SMALL: &[&str] = &["--n-authors", "12", "--posts-per-author", "60", "--vocab-shared", "300", "--dim", "16", "--epochs", "3"];

/// synth, ingest and train into `dir`; returns the model path.
fn pipeline(dir: &Path, model: &str) -> String {
    let mut synth = vec!["synth", "--output", "posts.jsonl"];
    synth.extend_from_slice(SMALL);
    ok(dir, &synth);
    ok(dir, &["ingest", "--input", "posts.jsonl", "--format", "jsonl", "--split", "half", "--seed", "4", "--output", "corpus.jsonl"]);
    let mut train = vec!["train", "--corpus", "corpus.jsonl", "--model", model];
    train.extend_from_slice(SMALL);
    ok(dir, &train);
    model.to_string()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = stylo(dir.path(), &["train", "--no-such-flag"]);
    assert_eq!(code(&out), 2);
    assert!(error_line(&out).starts_with("stylo: error code=2 kind=usage:"));
    assert_eq!(code(&stylo(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&stylo(dir.path(), &["query", "--dim", "x"])), 2);
    assert_eq!(code(&stylo(dir.path(), &["synth"])), 2, "missing --output");
}

#[test]
fn missing_files_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["train", "--config", "nope.json"][..],
        &["ingest", "--input", "nope.jsonl", "--output", "c.jsonl"],
        &["train", "--corpus", "nope.jsonl", "--model", "m.pvdm"],
        &["eval", "split-half", "--model", "nope.pvdm"],
    ] {
        let out = stylo(dir.path(), args);
        assert_eq!(code(&out), 3, "{args:?}");
        assert!(error_line(&out).contains("kind=missing_file"));
    }
}

#[test]
fn malformed_config_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"dim\": ").unwrap();
    std::fs::write(dir.path().join("unknown.json"), "{\"dimension\": 3}").unwrap();
    std::fs::write(dir.path().join("range.json"), "{\"window\": 0}").unwrap();
    for file in ["bad.json", "unknown.json", "range.json"] {
        let out = stylo(dir.path(), &["train", "--config", file]);
        assert_eq!(code(&out), 4, "{file}");
        assert!(error_line(&out).contains("kind=config"));
    }
    assert_eq!(code(&stylo(dir.path(), &["train", "--lr0=-1"])), 4);
}

#[test]
fn model_format_errors_have_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = pipeline(dir.path(), "m.pvdm");
    let bytes = std::fs::read(dir.path().join(&model)).unwrap();
    let cases: [(&str, Vec<u8>, i32); 4] = [
        ("magic.pvdm", [b"NOPE".as_slice(), &bytes[4..]].concat(), 5),
        ("version.pvdm", [&bytes[..4], &9u32.to_le_bytes(), &bytes[8..]].concat(), 6),
        ("short.pvdm", bytes[..bytes.len() / 2].to_vec(), 7),
        ("crc.pvdm", {
            let mut b = bytes.clone();
            let n = b.len();
            b[n - 8] ^= 1;
            b
        }, 8),
    ];
    for (name, data, expected) in cases {
        std::fs::write(dir.path().join(name), data).unwrap();
        let out = stylo(dir.path(), &["export", "--model", name]);
        assert_eq!(code(&out), expected, "{name}");
        assert!(out.stdout.is_empty(), "no partial output for {name}");
    }
}

#[test]
fn print_config_resolves_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), r#"{"dim": 32, "seed": 5, "k": 3}"#).unwrap();
    let parse = |out: Output| -> serde_json::Value { serde_json::from_slice(&out.stdout).unwrap() };

    let c = parse(stylo(dir.path(), &["--config", "run.json", "--print-config"]));
    assert_eq!((c["dim"].as_u64(), c["seed"].as_u64(), c["window"].as_u64()), (Some(32), Some(5), Some(5)));

    let env = Command::new(BIN)
        .args(["--config", "run.json", "--print-config"])
        .current_dir(dir.path())
        .env("STYLO_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(parse(env)["seed"].as_u64(), Some(77));

    let flags = Command::new(BIN)
        .args(["eval", "split-half", "--config", "run.json", "--seed", "9", "--dims", "4,8", "--drop-rt", "--print-config"])
        .current_dir(dir.path())
        .env("STYLO_SEED", "77")
        .output()
        .unwrap();
    let c = parse(flags);
    assert_eq!(c["seed"].as_u64(), Some(9));
    assert_eq!(c["dims"], serde_json::json!([4, 8]));
    assert_eq!(c["drop_rt"], serde_json::json!(true));
    assert_eq!(c["k"].as_u64(), Some(3));
}

#[test]
fn printed_config_is_a_valid_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let printed = ok(dir.path(), &["--print-config", "--dim", "12", "--split", "year", "--report", "r.json"]);
    std::fs::write(dir.path().join("again.json"), &printed).unwrap();
    assert_eq!(ok(dir.path(), &["--config", "again.json", "--print-config"]), printed);
}

#[test]
fn identical_runs_give_identical_model_files() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "a.pvdm");
    let mut train = vec!["train", "--corpus", "corpus.jsonl", "--model", "b.pvdm"];
    train.extend_from_slice(SMALL);
    ok(dir.path(), &train);
    let a = std::fs::read(dir.path().join("a.pvdm")).unwrap();
    let b = std::fs::read(dir.path().join("b.pvdm")).unwrap();
    assert!(a == b, "model files differ");
}

#[test]
fn eval_query_cluster_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let model = pipeline(d, "m.pvdm");

    let out = ok(d, &["eval", "split-half", "--model", &model, "--k", "1", "--report", "r.json", "--report-tsv", "r.tsv", "--activity", "0,1000000"]);
    let first = out.lines().next().unwrap();
    let acc: f64 = first.strip_prefix("accuracy=").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["protocol"], "split-half");
    assert_eq!(report["outcomes"].as_array().unwrap().len(), 12);
    assert_eq!(report["config"]["dim"].as_u64(), Some(16));
    assert!(report["wall_time_secs"].as_f64().is_some());
    assert_eq!(std::fs::read_to_string(d.join("r.tsv")).unwrap().lines().count(), 2);
    assert!(out.contains("1000000\t0\tNA\t12\t"), "{out}");

    let q = ok(d, &["query", "--model", &model, "--key", "u0003_A", "--top", "10"]);
    let lines: Vec<&str> = q.lines().collect();
    assert_eq!(lines.len(), 10);
    for (i, line) in lines.iter().enumerate() {
        let f: Vec<&str> = line.split(' ').collect();
        assert_eq!(f.len(), 3);
        assert_eq!(f[0], (i + 1).to_string());
        assert_ne!(f[1], "u0003_A");
        f[2].parse::<f64>().unwrap();
    }
    assert_eq!(code(&stylo(d, &["query", "--model", &model, "--key", "nobody"])), 1);
    assert_eq!(code(&stylo(d, &["query", "--model", &model])), 2);

    let tsv = ok(d, &["cluster", "--model", &model, "--corpus", "corpus.jsonl", "--clusters", "3", "--report", "cl.json"]);
    assert_eq!(tsv.lines().count(), 24);
    assert!(tsv.lines().all(|l| l.split('\t').nth(1).unwrap().parse::<usize>().unwrap() < 3));
    let cl: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("cl.json")).unwrap()).unwrap();
    let sizes: u64 = cl["clusters"].as_array().unwrap().iter().map(|c| c["size"].as_u64().unwrap()).sum();
    assert_eq!(sizes, 24);

    let vectors = ok(d, &["export", "--model", &model, "--vectors", "docs"]);
    assert_eq!(vectors.lines().count(), 25);
    assert_eq!(vectors.lines().next().unwrap(), "24 16");
    ok(d, &["export", "--model", &model, "--vectors", "vocab", "--output", "vocab.tsv"]);
    assert!(std::fs::read_to_string(d.join("vocab.tsv")).unwrap().lines().count() > 10);
}

#[test]
fn temporal_and_sweep_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--output", "p.jsonl", "--n-authors", "6", "--posts-per-author", "90", "--years", "3", "--vocab-shared", "300"]);
    ok(d, &["ingest", "--input", "p.jsonl", "--split", "year", "--output", "c.jsonl"]);
    ok(d, &["train", "--corpus", "c.jsonl", "--model", "m.pvdm", "--dim", "16", "--epochs", "3"]);
    let out = ok(d, &["eval", "temporal", "--model", "m.pvdm"]);
    assert!(out.starts_with("accuracy="));
    assert!(out.contains("n_authors=12 "), "{out}");

    ok(d, &["ingest", "--input", "p.jsonl", "--split", "half", "--output", "h.jsonl"]);
    ok(d, &["eval", "sweep", "--corpus", "h.jsonl", "--dims", "8,8,16", "--epochs", "2", "--report-tsv", "s.tsv", "--report", "s.json"]);
    let tsv = std::fs::read_to_string(d.join("s.tsv")).unwrap();
    let rows: Vec<&str> = tsv.lines().collect();
    assert_eq!(rows[0], "D\taccuracy");
    assert_eq!(rows.len(), 4);
    let acc = |r: &str| r.split('\t').nth(1).unwrap().to_string();
    assert_eq!(acc(rows[1]), acc(rows[2]), "duplicate D must agree");
}
