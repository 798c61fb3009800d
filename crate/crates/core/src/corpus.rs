//! Text preprocessing, vocabulary construction and the sampling tables used
//! during training.
//!
//! The input corpus is plain UTF-8 text with one sentence per line. Lines are
//! split on Unicode whitespace, tokens without any alphanumeric character are
//! dropped and the remaining tokens lose their leading and trailing
//! punctuation. Sentences with fewer than [`MIN_SENTENCE_TOKENS`] tokens are
//! not used for training.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};

/// Shortest sentence admitted to training.
pub const MIN_SENTENCE_TOKENS: usize = 5;

/// Default exponent applied to unigram counts for the noise distribution.
pub const DEFAULT_NOISE_POWER: f64 = 0.75;

/// Default number of slots in the noise table.
pub const DEFAULT_NOISE_TABLE_SIZE: usize = 10_000_000;

/// A tokenized sentence.
pub type Sentence = Vec<String>;

/// Split a line into tokens.
pub fn tokenize_line(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter(|tok| tok.chars().any(char::is_alphanumeric))
        .map(|tok| tok.trim_matches(|c: char| !c.is_alphanumeric()).to_owned())
        .collect()
}

/// Tokenize raw bytes, failing with the offset of the first invalid UTF-8
/// sequence.
pub fn tokenize_bytes(bytes: &[u8]) -> Result<Vec<String>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => Ok(tokenize_line(text)),
        Err(e) => Err(Error::Decode {
            line: None,
            offset: e.valid_up_to(),
        }),
    }
}

/// Keep the sentences that have at least `min_len` tokens, in order.
pub fn filter_sentences<I>(sentences: I, min_len: usize) -> impl Iterator<Item = Sentence>
where
    I: IntoIterator<Item = Sentence>,
{
    sentences.into_iter().filter(move |s| s.len() >= min_len)
}

/// Iterate over the tokenized lines of a reader.
///
/// Every line yields a sentence, including empty ones; use
/// [`filter_sentences`] to apply the length threshold.
pub fn read_sentences<R: BufRead>(reader: R) -> SentenceReader<R> {
    SentenceReader {
        reader,
        buf: Vec::new(),
        line: 0,
    }
}

pub struct SentenceReader<R> {
    reader: R,
    buf: Vec<u8>,
    line: usize,
}

impl<R: BufRead> Iterator for SentenceReader<R> {
    type Item = Result<Sentence>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line += 1;
                let line = self.line;
                Some(tokenize_bytes(&self.buf).map_err(|e| match e {
                    Error::Decode { offset, .. } => Error::Decode {
                        line: Some(line),
                        offset,
                    },
                    other => other,
                }))
            }
            Err(e) => Some(Err(e.into())),
        }
    }
}

/// Word counts with first-occurrence positions, used to build a
/// [`Vocabulary`].
///
/// Builders over disjoint shards of a corpus can be merged; positions are
/// offset by the caller so that ties resolve by global first occurrence.
#[derive(Debug, Default, Clone)]
pub struct VocabBuilder {
    counts: HashMap<String, (u64, u64)>,
    position: u64,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Start counting at the given global token position.
    pub fn starting_at(position: u64) -> Self {
        VocabBuilder {
            counts: HashMap::new(),
            position,
        }
    }

    pub fn add_sentence<S: AsRef<str>>(&mut self, tokens: &[S]) {
        for tok in tokens {
            let pos = self.position;
            self.position += 1;
            match self.counts.get_mut(tok.as_ref()) {
                Some(entry) => entry.0 += 1,
                None => {
                    self.counts.insert(tok.as_ref().to_owned(), (1, pos));
                }
            }
        }
    }

    pub fn merge(&mut self, other: VocabBuilder) {
        for (word, (count, first)) in other.counts {
            let entry = self.counts.entry(word).or_insert((0, first));
            entry.0 += count;
            entry.1 = entry.1.min(first);
        }
        self.position = self.position.max(other.position);
    }

    pub fn build(self, min_count: u64) -> Result<Vocabulary> {
        if min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let mut entries: Vec<(String, u64, u64)> = self
            .counts
            .into_iter()
            .filter(|(_, (count, _))| *count >= min_count)
            .map(|(w, (c, first))| (w, c, first))
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        Ok(Vocabulary::from_entries(
            entries.into_iter().map(|(w, c, _)| (w, c)).collect(),
            min_count,
        ))
    }
}

/// Count every token in `sentences` and keep words seen at least
/// `min_count` times.
pub fn build_vocabulary<I, S>(sentences: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[String]>,
{
    let mut builder = VocabBuilder::new();
    for s in sentences {
        builder.add_sentence(s.as_ref());
    }
    builder.build(min_count)
}

/// Like [`build_vocabulary`], sharding the counting across `workers` threads.
/// The result is identical to the single-threaded build.
pub fn build_vocabulary_parallel(
    sentences: &[Sentence],
    min_count: u64,
    workers: usize,
) -> Result<Vocabulary> {
    let workers = workers.max(1).min(sentences.len().max(1));
    let chunk = sentences.len().div_ceil(workers).max(1);
    let mut offsets = Vec::with_capacity(workers);
    let mut pos = 0u64;
    for part in sentences.chunks(chunk) {
        offsets.push(pos);
        pos += part.iter().map(|s| s.len() as u64).sum::<u64>();
    }
    let shards: Vec<VocabBuilder> = std::thread::scope(|scope| {
        let handles: Vec<_> = sentences
            .chunks(chunk)
            .zip(&offsets)
            .map(|(part, &offset)| {
                scope.spawn(move || {
                    let mut b = VocabBuilder::starting_at(offset);
                    for s in part {
                        b.add_sentence(s);
                    }
                    b
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("vocabulary worker panicked"))
            .collect()
    });
    let mut merged = VocabBuilder::new();
    for shard in shards {
        merged.merge(shard);
    }
    merged.build(min_count)
}

/// Frequency-ordered word list.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    folded: OnceLock<HashMap<String, usize>>,
    min_count: u64,
    total_tokens: u64,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
            && self.counts == other.counts
            && self.min_count == other.min_count
            && self.total_tokens == other.total_tokens
    }
}

impl Vocabulary {
    /// Entries must already be in index order.
    pub(crate) fn from_entries(entries: Vec<(String, u64)>, min_count: u64) -> Self {
        let (words, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let total_tokens = counts.iter().sum();
        Vocabulary {
            words,
            counts,
            index,
            folded: OnceLock::new(),
            min_count,
            total_tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.words
            .iter()
            .map(String::as_str)
            .zip(self.counts.iter().copied())
    }

    /// Exact lookup.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Exact lookup, falling back to the most frequent word that matches
    /// after lowercasing both sides.
    pub fn lookup(&self, word: &str) -> Option<usize> {
        self.index_of(word)
            .or_else(|| self.folded_index().get(&word.to_lowercase()).copied())
    }

    fn folded_index(&self) -> &HashMap<String, usize> {
        self.folded.get_or_init(|| {
            let mut map = HashMap::with_capacity(self.words.len());
            for (i, w) in self.words.iter().enumerate() {
                map.entry(w.to_lowercase()).or_insert(i);
            }
            map
        })
    }

    /// Relative frequency of word `idx` among retained tokens.
    pub fn frequency(&self, idx: usize) -> f64 {
        self.counts[idx] as f64 / self.total_tokens as f64
    }

    /// Read a dump written by [`Vocabulary::write_dump`]. Lines must be in
    /// index order.
    pub fn read_dump<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries: Vec<(String, u64)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(n + 1, "expected `word<TAB>count`"))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("bad count `{count}`")))?;
            if entries.last().is_some_and(|(_, prev)| *prev < count) {
                return Err(Error::parse(n + 1, "counts must not increase"));
            }
            if !seen.insert(word.to_owned()) {
                return Err(Error::DuplicateWord {
                    word: word.to_owned(),
                    line: n + 1,
                });
            }
            entries.push((word.to_owned(), count));
        }
        let min_count = entries.last().map_or(1, |e| e.1.max(1));
        Ok(Vocabulary::from_entries(entries, min_count))
    }

    /// Write the diagnostic dump: `word<TAB>count` per line in index order.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        for (w, c) in self.entries() {
            writeln!(out, "{w}\t{c}")?;
        }
        Ok(())
    }
}

/// Probability of keeping one occurrence of a word with relative frequency
/// `word_frequency` under subsampling threshold `threshold`.
pub fn keep_probability(word_frequency: f64, threshold: f64) -> Result<f64> {
    if !(word_frequency > 0.0 && word_frequency <= 1.0) {
        return Err(Error::Domain(format!(
            "word frequency must be in (0, 1], got {word_frequency}"
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!(
            "subsampling threshold must be positive, got {threshold}"
        )));
    }
    Ok((threshold / word_frequency).sqrt().clamp(0.0, 1.0))
}

/// Table of word indices in which each word occupies a share of slots
/// proportional to `count^power`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    slots: Vec<u32>,
    power: f64,
    vocab_size: usize,
}

impl NoiseTable {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Number of words the table was built from.
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn slots(&self) -> &[u32] {
        &self.slots
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.slots[rng.gen_range(0..self.slots.len())] as usize
    }
}

/// Build the negative-sampling noise table.
///
/// Word `w` receives `round(T * C_w) - round(T * C_{w-1})` slots where `C` is
/// the cumulative normalized weight, so every share is within one slot of
/// its exact value.
pub fn build_noise_table(vocab: &Vocabulary, power: f64, table_size: usize) -> Result<NoiseTable> {
    if vocab.is_empty() {
        return Err(Error::Config(
            "cannot build a noise table for an empty vocabulary".into(),
        ));
    }
    if table_size < vocab.len() {
        return Err(Error::Config(format!(
            "noise table size {table_size} is smaller than the vocabulary ({})",
            vocab.len()
        )));
    }
    if vocab.len() > u32::MAX as usize {
        return Err(Error::Config("vocabulary too large for noise table".into()));
    }
    let weights: Vec<f64> = vocab.counts().iter().map(|&c| (c as f64).powf(power)).collect();
    let norm: f64 = weights.iter().sum();
    let mut slots = Vec::with_capacity(table_size);
    let mut cumulative = 0.0;
    for (w, weight) in weights.iter().enumerate() {
        cumulative += weight;
        let end = if w + 1 == weights.len() {
            table_size
        } else {
            ((cumulative / norm) * table_size as f64).round() as usize
        };
        let end = end.clamp(slots.len(), table_size);
        slots.resize(end, w as u32);
    }
    Ok(NoiseTable {
        slots,
        power,
        vocab_size: vocab.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sentences(text: &str) -> Vec<Sentence> {
        text.lines().map(tokenize_line).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize_line("Zagreb je glavni grad ."),
            vec!["Zagreb", "je", "glavni", "grad"]
        );
        assert!(tokenize_line("").is_empty());
        assert_eq!(tokenize_line("a1 ,, b-2"), vec!["a1", "b-2"]);
    }

    #[test]
    fn tokenize_strips_edge_punctuation() {
        assert_eq!(tokenize_line("(Zagreb), \"kuća\"!"), vec!["Zagreb", "kuća"]);
        assert_eq!(tokenize_line("e-mail\u{00a0}x"), vec!["e-mail", "x"]);
    }

    #[test]
    fn tokenize_bytes_reports_offset() {
        let err = tokenize_bytes(b"abc \xff def").unwrap_err();
        assert!(matches!(err, Error::Decode { offset: 4, line: None }));
    }

    #[test]
    fn reader_reports_line_of_bad_utf8() {
        let input: &[u8] = b"one two\nok \xc3\x28\n";
        let results: Vec<_> = read_sentences(input).collect();
        assert_eq!(results[0].as_ref().unwrap(), &vec!["one", "two"]);
        assert!(matches!(
            results[1],
            Err(Error::Decode {
                line: Some(2),
                offset: 3
            })
        ));
    }

    #[test]
    fn filter_boundary() {
        let input: Vec<Sentence> = [4, 5, 9]
            .iter()
            .map(|&n| vec!["w".to_string(); n])
            .collect();
        let kept: Vec<usize> = filter_sentences(input, MIN_SENTENCE_TOKENS)
            .map(|s| s.len())
            .collect();
        assert_eq!(kept, vec![5, 9]);
        assert_eq!(filter_sentences(Vec::new(), 5).count(), 0);
    }

    #[test]
    fn filter_matches_reference_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lens: Vec<usize> = (0..100).map(|_| rng.gen_range(1..=10)).collect();
        let expected = lens.iter().filter(|&&n| n >= 5).count();
        let input: Vec<Sentence> = lens.iter().map(|&n| vec!["x".to_string(); n]).collect();
        let got: Vec<Sentence> = filter_sentences(input, 5).collect();
        assert_eq!(got.len(), expected);
        assert!(got.iter().all(|s| s.len() >= 5));
    }

    #[test]
    fn vocab_threshold_drop() {
        let v = build_vocabulary(sentences("a b a a"), 2).unwrap();
        assert_eq!(v.entries().collect::<Vec<_>>(), vec![("a", 3)]);
        assert_eq!(v.total_tokens(), 3);
    }

    #[test]
    fn vocab_ties_follow_first_occurrence() {
        let v = build_vocabulary(sentences("b a\na b b a"), 1).unwrap();
        assert_eq!(v.words(), &["b", "a"]);
    }

    #[test]
    fn vocab_empty_stream() {
        let v = build_vocabulary(Vec::<Sentence>::new(), 1).unwrap();
        assert!(v.is_empty());
        assert_eq!(v.total_tokens(), 0);
    }

    #[test]
    fn vocab_rejects_zero_min_count() {
        assert!(build_vocabulary(sentences("a"), 0).is_err());
    }

    #[test]
    fn vocab_lookup_case_fold() {
        let v = build_vocabulary(sentences("Zagreb zagreb Zagreb Split"), 1).unwrap();
        assert_eq!(v.lookup("Zagreb"), Some(0));
        assert_eq!(v.lookup("zagreb"), Some(1));
        assert_eq!(v.lookup("ZAGREB"), Some(0));
        assert_eq!(v.lookup("split"), Some(2));
        assert_eq!(v.lookup("Rijeka"), None);
    }

    #[test]
    fn vocab_dump_format() {
        let v = build_vocabulary(sentences("a b a"), 1).unwrap();
        let mut out = Vec::new();
        v.write_dump(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a\t2\nb\t1\n");
        let back = Vocabulary::read_dump("a\t2\nb\t1\n".as_bytes()).unwrap();
        assert_eq!(back.words(), v.words());
        assert_eq!(back.counts(), v.counts());
        assert!(Vocabulary::read_dump("a\t1\nb\t2\n".as_bytes()).is_err());
    }

    #[test]
    fn keep_probability_examples() {
        assert_eq!(keep_probability(1e-5, 1e-5).unwrap(), 1.0);
        approx::assert_abs_diff_eq!(keep_probability(1e-3, 1e-5).unwrap(), 0.1, epsilon = 1e-12);
        assert_eq!(keep_probability(1e-6, 1e-5).unwrap(), 1.0);
        assert!(matches!(keep_probability(0.0, 1e-5), Err(Error::Domain(_))));
        assert!(matches!(keep_probability(-1.0, 1e-5), Err(Error::Domain(_))));
    }

    #[test]
    fn noise_table_two_words() {
        let v = build_vocabulary(sentences("a a a b"), 1).unwrap();
        let table = build_noise_table(&v, 0.75, 1_000_000).unwrap();
        let share = table.slots().iter().filter(|&&s| s == 0).count() as f64 / 1e6;
        // 3^0.75 / (3^0.75 + 1)
        approx::assert_abs_diff_eq!(share, 0.695_0, epsilon = 1e-3);
    }

    #[test]
    fn noise_table_single_word_and_symmetry() {
        let v = build_vocabulary(sentences("a a a a a"), 1).unwrap();
        let table = build_noise_table(&v, 0.3, 1000).unwrap();
        assert!(table.slots().iter().all(|&s| s == 0));

        let v = build_vocabulary(sentences("a b"), 1).unwrap();
        let table = build_noise_table(&v, 0.75, 1000).unwrap();
        assert_eq!(table.slots().iter().filter(|&&s| s == 0).count(), 500);
    }

    #[test]
    fn noise_table_errors() {
        let empty = build_vocabulary(Vec::<Sentence>::new(), 1).unwrap();
        assert!(matches!(build_noise_table(&empty, 0.75, 10), Err(Error::Config(_))));
        let v = build_vocabulary(sentences("a b c"), 1).unwrap();
        assert!(build_noise_table(&v, 0.75, 2).is_err());
    }
}
