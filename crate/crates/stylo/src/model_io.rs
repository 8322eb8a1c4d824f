//! Binary model files and text exports.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "PVDM" | version u32
//! config:  u32 byte length, then dim window negatives epochs (u64),
//!          lr0 lr_min subsample (f64), min_count seed workers (u64)
//! vocab:   min_count u64 | n u64 | n x (u32 len, utf-8 word, u64 count)
//! docs:    n u64 | n x (u32 len, utf-8 key, u32 post_count)
//! 3 x matrix (word_in, word_out, docs): rows u64 | cols u64 | rows*cols f32
//! crc32 of everything above, u32
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use stylo_core::pvdm::{Matrix, Model, Params, TrainConfig};
use stylo_core::vocab::Vocabulary;

pub const MAGIC: &[u8; 4] = b"PVDM";
pub const FORMAT_VERSION: u32 = 1;
const CONFIG_BYTES: u32 = 10 * 8;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("model file is truncated")]
    Truncated,
    #[error("model checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, ModelFileError>;

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn put_matrix(buf: &mut Vec<u8>, m: &Matrix<f32>) {
    buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    buf.reserve(m.as_slice().len() * 4);
    for x in m.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_model(model: &Model) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());

    let c = &model.config;
    buf.extend_from_slice(&CONFIG_BYTES.to_le_bytes());
    for v in [c.dim, c.window, c.negatives, c.epochs] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for v in [c.lr0, c.lr_min, c.subsample] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in [c.min_count, c.seed, c.workers as u64] {
        buf.extend_from_slice(&v.to_le_bytes());
    }

    let vocab = &model.vocab;
    buf.extend_from_slice(&vocab.min_count().to_le_bytes());
    buf.extend_from_slice(&(vocab.len() as u64).to_le_bytes());
    for (word, count) in vocab.words().iter().zip(vocab.counts()) {
        put_str(&mut buf, word);
        buf.extend_from_slice(&count.to_le_bytes());
    }

    buf.extend_from_slice(&(model.doc_keys.len() as u64).to_le_bytes());
    for (key, posts) in model.doc_keys.iter().zip(&model.doc_post_counts) {
        put_str(&mut buf, key);
        buf.extend_from_slice(&posts.to_le_bytes());
    }

    put_matrix(&mut buf, &model.params.word_in);
    put_matrix(&mut buf, &model.params.word_out);
    put_matrix(&mut buf, &model.params.docs);

    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(ModelFileError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(ModelFileError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| ModelFileError::Malformed("size overflows usize".into()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| ModelFileError::Malformed("string is not utf-8".into()))
    }

    /// Guards allocations against corrupt counts.
    fn remaining_at_least(&self, n: usize) -> Result<()> {
        if self.buf.len() - self.pos < n {
            Err(ModelFileError::Truncated)
        } else {
            Ok(())
        }
    }

    fn matrix(&mut self) -> Result<Matrix<f32>> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let n = rows.checked_mul(cols).ok_or_else(|| ModelFileError::Malformed("matrix too large".into()))?;
        let bytes = self.take(n.checked_mul(4).ok_or(ModelFileError::Truncated)?)?;
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Matrix::from_vec(rows, cols, data).map_err(|e| ModelFileError::Malformed(e.to_string()))
    }
}

pub fn decode_model(buf: &[u8]) -> Result<Model> {
    let mut r = Reader { buf, pos: 0 };
    if buf.len() < 4 {
        return Err(if MAGIC.starts_with(buf) { ModelFileError::Truncated } else { ModelFileError::BadMagic });
    }
    if r.take(4)? != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelFileError::Version { found: version });
    }

    let config_len = r.u32()?;
    if config_len != CONFIG_BYTES {
        return Err(ModelFileError::Malformed(format!("config block of {config_len} bytes")));
    }
    let dim = r.usize()?;
    let window = r.usize()?;
    let negatives = r.usize()?;
    let epochs = r.usize()?;
    let lr0 = r.f64()?;
    let lr_min = r.f64()?;
    let subsample = r.f64()?;
    let min_count = r.u64()?;
    let seed = r.u64()?;
    let workers = r.usize()?;
    let config = TrainConfig {
        dim,
        window,
        negatives,
        epochs,
        lr0,
        lr_min,
        subsample,
        min_count,
        seed,
        workers,
    };

    let vocab_min_count = r.u64()?;
    let n_words = r.usize()?;
    r.remaining_at_least(n_words.saturating_mul(12))?;
    let mut entries = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        let word = r.string()?;
        entries.push((word, r.u64()?));
    }

    let n_docs = r.usize()?;
    r.remaining_at_least(n_docs.saturating_mul(8))?;
    let mut doc_keys = Vec::with_capacity(n_docs);
    let mut doc_post_counts = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        doc_keys.push(r.string()?);
        doc_post_counts.push(r.u32()?);
    }

    let word_in = r.matrix()?;
    let word_out = r.matrix()?;
    let docs = r.matrix()?;

    let body_end = r.pos;
    let stored = r.u32()?;
    if r.pos != buf.len() {
        return Err(ModelFileError::Malformed(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    let computed = crc32fast::hash(&buf[..body_end]);
    if stored != computed {
        return Err(ModelFileError::Checksum { stored, computed });
    }

    let malformed = |m: String| ModelFileError::Malformed(m);
    let vocab = Vocabulary::from_counts(entries, vocab_min_count).map_err(|e| malformed(e.to_string()))?;
    for (name, m, rows) in [("word_in", &word_in, vocab.len()), ("word_out", &word_out, vocab.len()), ("docs", &docs, n_docs)] {
        if m.rows() != rows || m.cols() != dim {
            return Err(malformed(format!("{name} is {}x{}, expected {rows}x{dim}", m.rows(), m.cols())));
        }
    }
    Ok(Model {
        params: Params { word_in, word_out, docs },
        doc_keys,
        doc_post_counts,
        vocab,
        config,
    })
}

/// Write to a sibling temporary file and rename, so a failed save never
/// leaves a half-written model behind.
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let bytes = encode_model(model);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    decode_model(&std::fs::read(path)?)
}

/// Which rows to export as text vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorSet {
    /// Raw author vectors.
    Docs,
    /// Unit-normalized author vectors.
    Fingerprints,
    /// Word input vectors.
    Words,
}

/// `<rows> <D>` header, then `<key> <v1> ... <vD>` per row. Floats use the
/// shortest representation that parses back to the same bits.
pub fn write_text_vectors<W: Write>(out: &mut W, model: &Model, set: VectorSet) -> std::io::Result<()> {
    let dim = model.dim();
    let (keys, matrix): (Vec<&str>, &Matrix<f32>) = match set {
        VectorSet::Docs | VectorSet::Fingerprints => (model.doc_keys.iter().map(String::as_str).collect(), &model.params.docs),
        VectorSet::Words => (model.vocab.words().iter().map(String::as_str).collect(), &model.params.word_in),
    };
    writeln!(out, "{} {}", keys.len(), dim)?;
    let mut row = vec![0f32; dim];
    for (i, key) in keys.iter().enumerate() {
        row.copy_from_slice(matrix.row(i));
        if set == VectorSet::Fingerprints {
            let n = row.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x = (f64::from(*x) / n) as f32);
            }
        }
        write!(out, "{key}")?;
        for x in &row {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `word<TAB>count` in id order.
pub fn write_vocab_tsv<W: Write>(out: &mut W, vocab: &Vocabulary) -> std::io::Result<()> {
    for (word, count) in vocab.words().iter().zip(vocab.counts()) {
        writeln!(out, "{word}\t{count}")?;
    }
    Ok(())
}

pub fn export_to_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    f(&mut out)?;
    out.flush()
}
