//! Trained vectors, cosine retrieval and the word2vec text format.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0f64, 0f64, 0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (f64::from(a), f64::from(b));
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    // One square root keeps cosine(v, v) exactly 1.
    Ok((dot / (nu * nv).sqrt()).clamp(-1.0, 1.0))
}

/// `v / |v|`, computed in double precision; zero vectors stay zero.
pub fn unit(v: &[f32]) -> Vec<f32> {
    let norm = v.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|&x| (f64::from(x) / norm) as f32).collect()
}

/// Vocabulary plus one dense vector per word.
#[derive(Debug, Clone)]
pub struct VectorStore {
    vocab: Vocabulary,
    dim: usize,
    vectors: Vec<f32>,
    normalized: OnceLock<Vec<f32>>,
}

impl PartialEq for VectorStore {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab && self.dim == other.dim && self.vectors == other.vectors
    }
}

impl VectorStore {
    pub fn new(vocab: Vocabulary, dim: usize, vectors: Vec<f32>) -> Result<Self> {
        if vectors.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch {
                left: vectors.len(),
                right: vocab.len() * dim,
            });
        }
        Ok(VectorStore {
            vocab,
            dim,
            vectors,
            normalized: OnceLock::new(),
        })
    }

    /// Build a store from words in frequency order, assigning counts
    /// `V - rank`.
    pub fn from_words<S: Into<String>>(
        words: impl IntoIterator<Item = S>,
        dim: usize,
        vectors: Vec<f32>,
    ) -> Result<Self> {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        let v = words.len() as u64;
        let mut seen = HashSet::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if !seen.insert(w.as_str()) {
                return Err(Error::DuplicateWord {
                    word: w.clone(),
                    line: i + 2,
                });
            }
        }
        let entries = words
            .into_iter()
            .enumerate()
            .map(|(i, w)| (w, v - i as u64))
            .collect();
        Self::new(Vocabulary::from_entries(entries, 1), dim, vectors)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn row(&self, idx: usize) -> &[f32] {
        &self.vectors[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Unit-normalized copy of every row, built on first use.
    pub fn normalized(&self) -> &[f32] {
        self.normalized.get_or_init(|| {
            let mut out = Vec::with_capacity(self.vectors.len());
            for i in 0..self.len() {
                out.extend(unit(self.row(i)));
            }
            out
        })
    }

    pub fn unit_row(&self, idx: usize) -> &[f32] {
        &self.normalized()[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Exact lookup, then case-folded.
    pub fn lookup(&self, word: &str) -> Option<usize> {
        self.vocab.lookup(word)
    }

    pub fn word(&self, idx: usize) -> &str {
        self.vocab.word(idx)
    }

    /// Vector of a word, if present.
    pub fn embedding(&self, word: &str) -> Option<&[f32]> {
        self.lookup(word).map(|i| self.row(i))
    }

    /// The `k` rows among the first `search_limit` that are most similar to
    /// `query`, skipping `exclude`. Ties go to the lower (more frequent) index.
    pub fn nearest(
        &self,
        query: &[f32],
        k: usize,
        search_limit: usize,
        exclude: &[usize],
    ) -> Result<Vec<(usize, f64)>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: query.len(),
                right: self.dim,
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let norm = query.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
        let q: Vec<f64> = if norm == 0.0 {
            vec![0.0; self.dim]
        } else {
            query.iter().map(|&x| f64::from(x) / norm).collect()
        };
        let limit = search_limit.min(self.len());
        let normalized = self.normalized();
        // Sorted by descending similarity, then ascending index.
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        for idx in 0..limit {
            if exclude.contains(&idx) {
                continue;
            }
            let row = &normalized[idx * self.dim..(idx + 1) * self.dim];
            let sim: f64 = q.iter().zip(row).map(|(&a, &b)| a * f64::from(b)).sum();
            if best.len() == k && sim <= best[k - 1].1 {
                continue;
            }
            // Rows arrive in increasing index order, so an equal similarity
            // goes after the existing entries.
            let at = best.partition_point(|&(_, s)| s >= sim);
            best.insert(at, (idx, sim));
            best.truncate(k);
        }
        Ok(best)
    }

    /// Write the word2vec text format.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for w in self.vocab.words() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::WhitespaceInWord(w.clone()));
            }
        }
        writeln!(out, "{} {}", self.len(), self.dim)?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            line.push_str(self.word(i));
            for v in self.row(i) {
                use std::fmt::Write as _;
                write!(line, " {v}").expect("writing to a String cannot fail");
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Read the word2vec text format.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(Error::parse(1, "missing header line")),
        };
        let mut parts = header.split_whitespace();
        let (v, dim) = match (parts.next(), parts.next(), parts.next()) {
            (Some(v), Some(d), None) => (
                v.parse::<usize>()
                    .map_err(|_| Error::parse(1, format!("bad vocabulary size `{v}`")))?,
                d.parse::<usize>()
                    .map_err(|_| Error::parse(1, format!("bad dimension `{d}`")))?,
            ),
            _ => return Err(Error::parse(1, "header must be `<words> <dim>`")),
        };
        let mut words = Vec::with_capacity(v);
        let mut seen = HashSet::with_capacity(v);
        let mut vectors = Vec::with_capacity(v * dim);
        for (n, line) in lines {
            let line_no = n + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if words.len() == v {
                return Err(Error::parse(
                    line_no,
                    format!("more rows than the {v} declared in the header"),
                ));
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("nonempty line has a field");
            let before = vectors.len();
            for f in fields {
                let x = f
                    .parse::<f32>()
                    .map_err(|_| Error::parse(line_no, format!("bad number `{f}`")))?;
                vectors.push(x);
            }
            if vectors.len() - before != dim {
                return Err(Error::parse(
                    line_no,
                    format!("expected {dim} values, found {}", vectors.len() - before),
                ));
            }
            if !seen.insert(word.to_owned()) {
                return Err(Error::DuplicateWord {
                    word: word.to_owned(),
                    line: line_no,
                });
            }
            words.push(word.to_owned());
        }
        if words.len() != v {
            return Err(Error::parse(
                words.len() + 2,
                format!("header declares {v} words but the file has {}", words.len()),
            ));
        }
        Self::from_words(words, dim, vectors)
    }

    /// Every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        let vectors = self.vectors.iter().map(|v| v * factor).collect();
        Self::new(self.vocab.clone(), self.dim, vectors).expect("same shape")
    }
}
