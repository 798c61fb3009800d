use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::store::{cosine, VectorStore};

/// Number of least frequent words averaged into the OOV stand-in vector.
pub const OOV_FALLBACK_WORDS: usize = 10;

/// A word pair with its human similarity judgment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPair {
    pub w1: String,
    pub w2: String,
    pub human_score: f64,
}

/// Read `w1<TAB>w2<TAB>score` lines, checking scores against
/// `[scale_min, scale_max]`. Blank lines and `#` comments are skipped.
pub fn read_similarity_pairs<R: BufRead>(
    reader: R,
    scale_min: f64,
    scale_max: f64,
) -> Result<Vec<SimilarityPair>> {
    let mut pairs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected `w1<TAB>w2<TAB>score`, found {} fields", fields.len()),
            ));
        }
        let score: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad score `{}`", fields[2])))?;
        if !(scale_min..=scale_max).contains(&score) {
            return Err(Error::parse(
                line_no,
                format!("score {score} outside the scale [{scale_min}, {scale_max}]"),
            ));
        }
        pairs.push(SimilarityPair {
            w1: fields[0].trim().to_owned(),
            w2: fields[1].trim().to_owned(),
            human_score: score,
        });
    }
    Ok(pairs)
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average-rank vectors.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "rank correlation needs at least 2 observations, got {}",
            xs.len()
        )));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Mean of the raw vectors of the ten least frequent words (all words when
/// the store has fewer).
pub fn oov_fallback_vector(store: &VectorStore) -> Vec<f32> {
    let v = store.len();
    let start = v.saturating_sub(OOV_FALLBACK_WORDS);
    let mut acc = vec![0f64; store.dim()];
    for i in start..v {
        for (a, &x) in acc.iter_mut().zip(store.row(i)) {
            *a += f64::from(x);
        }
    }
    let n = (v - start).max(1) as f64;
    acc.into_iter().map(|a| (a / n) as f32).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub pair: SimilarityPair,
    pub cosine: f64,
    pub w1_oov: bool,
    pub w2_oov: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    /// Spearman's rho times 100.
    pub score: f64,
    pub pairs: Vec<PairScore>,
}

impl SimilarityReport {
    pub fn oov_words(&self) -> usize {
        self.pairs
            .iter()
            .map(|p| usize::from(p.w1_oov) + usize::from(p.w2_oov))
            .sum()
    }

    pub fn write_detail<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.pairs {
            let mark = |oov: bool| if oov { "*" } else { "" };
            writeln!(
                out,
                "{}{}\t{}{}\t{}\t{:.6}",
                p.pair.w1,
                mark(p.w1_oov),
                p.pair.w2,
                mark(p.w2_oov),
                p.pair.human_score,
                p.cosine
            )?;
        }
        Ok(())
    }
}

/// Rank correlation between human scores and model cosines. Words missing
/// from the store are replaced by [`oov_fallback_vector`].
pub fn evaluate_similarity(store: &VectorStore, pairs: &[SimilarityPair]) -> Result<SimilarityReport> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no similarity pairs".into()));
    }
    let fallback = oov_fallback_vector(store);
    let vector = |w: &str| match store.embedding(w) {
        Some(v) => (v, false),
        None => (fallback.as_slice(), true),
    };
    let mut scored = Vec::with_capacity(pairs.len());
    for p in pairs {
        let (v1, o1) = vector(&p.w1);
        let (v2, o2) = vector(&p.w2);
        scored.push(PairScore {
            pair: p.clone(),
            cosine: cosine(v1, v2)?,
            w1_oov: o1,
            w2_oov: o2,
        });
    }
    let human: Vec<f64> = scored.iter().map(|p| p.pair.human_score).collect();
    let model: Vec<f64> = scored.iter().map(|p| p.cosine).collect();
    let rho = spearman(&human, &model)?;
    Ok(SimilarityReport {
        score: rho * 100.0,
        pairs: scored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_examples() {
        approx::assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(),
            0.8,
            epsilon = 1e-15
        );
    }

    #[test]
    fn spearman_errors() {
        assert!(matches!(spearman(&[1.0], &[1.0]), Err(Error::InsufficientData(_))));
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation)
        ));
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    fn twelve_word_store() -> VectorStore {
        let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
        let rows: Vec<f32> = (0..12).flat_map(|i| [i as f32, 1.0]).collect();
        VectorStore::from_words(words, 2, rows).unwrap()
    }

    #[test]
    fn fallback_is_mean_of_least_frequent() {
        let s = twelve_word_store();
        // rows 2..=11: mean of 2..11 is 6.5
        assert_eq!(oov_fallback_vector(&s), vec![6.5, 1.0]);

        let ten = VectorStore::from_words((0..10).map(|i| format!("w{i}")), 1, (0..10).map(|i| i as f32).collect()).unwrap();
        assert_eq!(oov_fallback_vector(&ten), vec![4.5]);

        let small = VectorStore::from_words(["a", "b"], 1, vec![1.0, 3.0]).unwrap();
        assert_eq!(oov_fallback_vector(&small), vec![2.0]);
    }

    #[test]
    fn both_words_oov_gives_cosine_one() {
        let s = twelve_word_store();
        let pairs = vec![
            SimilarityPair { w1: "zz".into(), w2: "yy".into(), human_score: 9.0 },
            SimilarityPair { w1: "w0".into(), w2: "w11".into(), human_score: 1.0 },
            SimilarityPair { w1: "w10".into(), w2: "w11".into(), human_score: 5.0 },
        ];
        let r = evaluate_similarity(&s, &pairs).unwrap();
        approx::assert_abs_diff_eq!(r.pairs[0].cosine, 1.0, epsilon = 1e-12);
        assert!(r.pairs[0].w1_oov && r.pairs[0].w2_oov);
        assert_eq!(r.oov_words(), 2);
        assert_eq!(r.pairs.len(), 3);
        approx::assert_abs_diff_eq!(r.score, 100.0, epsilon = 1e-9);
    }

    #[test]
    fn read_pairs_checks_scale() {
        let ok = read_similarity_pairs("a\tb\t3.5\n# x\n\nc\td\t10\n".as_bytes(), 0.0, 10.0).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[0].human_score, 3.5);
        let err = read_similarity_pairs("a\tb\t7\n".as_bytes(), 0.0, 5.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = read_similarity_pairs("a b 7\n".as_bytes(), 0.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
