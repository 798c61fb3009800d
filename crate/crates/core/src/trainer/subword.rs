//! Character n-grams and their hashed bucket rows.

use crate::corpus::Vocabulary;

use super::config::ModelConfig;

const FNV_OFFSET_BASIS: u32 = 2_166_136_261;
const FNV_PRIME: u32 = 16_777_619;

/// Character n-grams of `<word>` with lengths `minn..=maxn`, ordered by start
/// position then length. The n-gram spanning the whole wrapped word is
/// left out.
pub fn extract_ngrams(word: &str, minn: usize, maxn: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let total = wrapped.len();
    let mut out = Vec::new();
    for start in 0..total {
        for len in minn.max(1)..=maxn {
            let end = start + len;
            if end > total {
                break;
            }
            if start == 0 && end == total {
                continue;
            }
            out.push(wrapped[start..end].iter().collect());
        }
    }
    out
}

/// 32-bit FNV-1a of the UTF-8 bytes, reduced modulo `buckets`.
pub fn hash_ngram(ngram: &str, buckets: usize) -> usize {
    assert!(buckets >= 1, "need at least one bucket");
    let mut h = FNV_OFFSET_BASIS;
    for &b in ngram.as_bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    (h as usize) % buckets
}

/// For every vocabulary word, the input rows that are averaged into its
/// representation: its own row first, followed by one bucket row per
/// extracted n-gram (duplicates kept).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordRows {
    offsets: Vec<usize>,
    rows: Vec<u32>,
}

impl WordRows {
    pub fn new(vocab: &Vocabulary, config: &ModelConfig) -> Self {
        let v = vocab.len();
        let mut offsets = Vec::with_capacity(v + 1);
        let mut rows = Vec::with_capacity(v);
        offsets.push(0);
        for (idx, word) in vocab.words().iter().enumerate() {
            rows.push(idx as u32);
            if config.subword {
                for ng in extract_ngrams(word, config.minn, config.maxn) {
                    rows.push((v + hash_ngram(&ng, config.buckets)) as u32);
                }
            }
            offsets.push(rows.len());
        }
        WordRows { offsets, rows }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self, word: usize) -> &[u32] {
        &self.rows[self.offsets[word]..self.offsets[word + 1]]
    }
}
