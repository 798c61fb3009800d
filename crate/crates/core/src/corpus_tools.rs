//! Building analogy corpora from category pair lists and checking their
//! vocabulary coverage.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::eval::{expand_pairs, AnalogyCorpus, Category, Group};

/// One analogy category described by its word pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySpec {
    pub name: String,
    pub group: Group,
    pub pairs: Vec<(String, String)>,
}

/// Question counts produced by [`build_corpus`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildStats {
    pub per_category: Vec<(String, Group, usize, usize)>,
    pub semantic: usize,
    pub syntactic: usize,
}

impl BuildStats {
    pub fn total(&self) -> usize {
        self.semantic + self.syntactic
    }

    /// Messages for every group total that differs from an expected count.
    pub fn discrepancies(
        &self,
        expected_semantic: Option<usize>,
        expected_syntactic: Option<usize>,
        expected_total: Option<usize>,
    ) -> Vec<String> {
        let mut out = Vec::new();
        for (label, actual, expected) in [
            ("semantic", self.semantic, expected_semantic),
            ("syntactic", self.syntactic, expected_syntactic),
            ("total", self.total(), expected_total),
        ] {
            if let Some(e) = expected {
                if e != actual {
                    let diff = actual as i64 - e as i64;
                    out.push(format!(
                        "{label} questions: expanded {actual} by n(n-1), expected {e} (difference {diff:+})"
                    ));
                }
            }
        }
        out
    }

    /// Summary table: one line per category, then group sums.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (name, group, pairs, questions) in &self.per_category {
            let _ = writeln!(s, "{name}\t{group}\t{pairs} pairs\t{questions} questions");
        }
        let _ = writeln!(s, "semantic_questions={}", self.semantic);
        let _ = writeln!(s, "syntactic_questions={}", self.syntactic);
        let _ = writeln!(s, "total_questions={}", self.total());
        s
    }
}

/// Expand every category into questions.
pub fn build_corpus(specs: &[CategorySpec]) -> Result<(AnalogyCorpus, BuildStats)> {
    if specs.is_empty() {
        return Err(Error::InsufficientData("no categories to build".into()));
    }
    let mut names = HashSet::new();
    let mut categories = Vec::with_capacity(specs.len());
    let mut per_category = Vec::with_capacity(specs.len());
    let (mut semantic, mut syntactic) = (0, 0);
    for spec in specs {
        if !names.insert(spec.name.as_str()) {
            return Err(Error::DuplicateCategory(spec.name.clone()));
        }
        let mut seen = HashSet::new();
        for p in &spec.pairs {
            if !seen.insert(p) {
                return Err(Error::InvalidQuestion(format!(
                    "category `{}` lists the pair `{} {}` twice",
                    spec.name, p.0, p.1
                )));
            }
        }
        let questions = expand_pairs(&spec.pairs).map_err(|e| match e {
            Error::InsufficientData(msg) => {
                Error::InsufficientData(format!("category `{}`: {msg}", spec.name))
            }
            other => other,
        })?;
        match spec.group {
            Group::Semantic => semantic += questions.len(),
            Group::Syntactic => syntactic += questions.len(),
        }
        per_category.push((spec.name.clone(), spec.group, spec.pairs.len(), questions.len()));
        categories.push(Category {
            name: spec.name.clone(),
            group: spec.group,
            questions,
        });
    }
    let corpus = AnalogyCorpus::new(categories)?;
    Ok((
        corpus,
        BuildStats {
            per_category,
            semantic,
            syntactic,
        },
    ))
}

/// Read a pair list: `x<TAB>y` per line, `#` comments and blank lines ignored.
pub fn read_pair_list<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (x, y) = trimmed
            .split_once('\t')
            .ok_or_else(|| Error::parse(n + 1, "expected `x<TAB>y`"))?;
        let (x, y) = (x.trim(), y.trim());
        if x.is_empty() || y.is_empty() || y.contains('\t') {
            return Err(Error::parse(n + 1, "expected exactly two nonempty words"));
        }
        out.push((x.to_owned(), y.to_owned()));
    }
    Ok(out)
}

/// Manifest entry `name<TAB>group<TAB>path`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub group: Group,
    pub path: PathBuf,
}

pub fn read_manifest<R: BufRead>(reader: R) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(n + 1, "expected `name<TAB>group<TAB>path`"));
        }
        let group = fields[1].parse().map_err(|e: String| Error::parse(n + 1, e))?;
        out.push(ManifestEntry {
            name: fields[0].trim().to_owned(),
            group,
            path: PathBuf::from(fields[2].trim()),
        });
    }
    Ok(out)
}

/// Load every category listed in a manifest file. Relative pair-list paths
/// resolve against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<CategorySpec>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let entries = read_manifest(BufReader::new(file)).map_err(|e| e.in_file(path))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    entries
        .into_iter()
        .map(|entry| {
            let pair_path = if entry.path.is_absolute() {
                entry.path.clone()
            } else {
                base.join(&entry.path)
            };
            let file = File::open(&pair_path).map_err(|e| Error::io(&pair_path, e))?;
            let pairs = read_pair_list(BufReader::new(file)).map_err(|e| e.in_file(&pair_path))?;
            Ok(CategorySpec {
                name: entry.name,
                group: entry.group,
                pairs,
            })
        })
        .collect()
}

/// Coverage of one category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryCoverage {
    pub name: String,
    pub group: Group,
    pub total: usize,
    /// Questions whose four words all resolve within the search limit.
    pub covered: usize,
    /// Missing words with the number of questions each appears in.
    pub oov_words: BTreeMap<String, usize>,
}

impl CategoryCoverage {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.covered as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub categories: Vec<CategoryCoverage>,
}

impl CoverageReport {
    pub fn total(&self) -> usize {
        self.categories.iter().map(|c| c.total).sum()
    }

    pub fn covered(&self) -> usize {
        self.categories.iter().map(|c| c.covered).sum()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.categories {
            let _ = writeln!(
                s,
                "{}\t{}\t{}/{}\t{:.2}%",
                c.name,
                c.group,
                c.covered,
                c.total,
                c.percent()
            );
            let mut missing: Vec<(&String, &usize)> = c.oov_words.iter().collect();
            missing.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
            for (w, n) in missing {
                let _ = writeln!(s, "  oov\t{w}\t{n}");
            }
        }
        let _ = writeln!(s, "covered={}", self.covered());
        let _ = writeln!(s, "total={}", self.total());
        s
    }
}

/// Count, per category, the questions answerable with the first
/// `search_limit` words of `vocab` and list the words that are missing.
pub fn validate_corpus(corpus: &AnalogyCorpus, vocab: &Vocabulary, search_limit: usize) -> CoverageReport {
    let known = |w: &str| vocab.lookup(w).is_some_and(|i| i < search_limit);
    let categories = corpus
        .categories()
        .iter()
        .map(|cat| {
            let mut covered = 0;
            let mut oov_words = BTreeMap::new();
            for q in &cat.questions {
                let mut missing: Vec<&str> = q.words().into_iter().filter(|w| !known(w)).collect();
                if missing.is_empty() {
                    covered += 1;
                }
                missing.sort_unstable();
                missing.dedup();
                for w in missing {
                    *oov_words.entry(w.to_owned()).or_insert(0) += 1;
                }
            }
            CategoryCoverage {
                name: cat.name.clone(),
                group: cat.group,
                total: cat.questions.len(),
                covered,
                oov_words,
            }
        })
        .collect();
    CoverageReport { categories }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use std::collections::HashMap;

    fn spec(name: &str, group: Group, n: usize) -> CategorySpec {
        CategorySpec {
            name: name.into(),
            group,
            pairs: (0..n).map(|i| (format!("{name}x{i}"), format!("{name}y{i}"))).collect(),
        }
    }

    #[test]
    fn single_spec() {
        let (corpus, stats) = build_corpus(&[spec("c", Group::Semantic, 2)]).unwrap();
        assert_eq!(corpus.categories().len(), 1);
        assert_eq!(corpus.question_count(), 2);
        assert_eq!(stats.semantic, 2);
    }

    #[test]
    fn errors() {
        assert!(build_corpus(&[]).is_err());
        assert!(matches!(
            build_corpus(&[spec("a", Group::Semantic, 2), spec("a", Group::Syntactic, 3)]),
            Err(Error::DuplicateCategory(_))
        ));
        assert!(matches!(
            build_corpus(&[spec("a", Group::Semantic, 1)]),
            Err(Error::InsufficientData(_))
        ));
        let mut dup = spec("a", Group::Semantic, 2);
        dup.pairs.push(dup.pairs[0].clone());
        assert!(build_corpus(&[dup]).is_err());
    }

    #[test]
    fn discrepancy_messages() {
        let (_, stats) = build_corpus(&[spec("a", Group::Semantic, 3)]).unwrap();
        assert!(stats.discrepancies(Some(6), None, Some(6)).is_empty());
        let msgs = stats.discrepancies(Some(5), None, None);
        assert_eq!(msgs.len(), 1);
        assert!(msgs[0].contains("expanded 6") && msgs[0].contains("+1"));
    }

    #[test]
    fn pair_list_and_manifest_parsing() {
        let pairs = read_pair_list("# header\nAthens\tGreece\n\nOslo\tNorway\n".as_bytes()).unwrap();
        assert_eq!(pairs, vec![("Athens".into(), "Greece".into()), ("Oslo".into(), "Norway".into())]);
        assert!(read_pair_list("Athens Greece\n".as_bytes()).is_err());
        let m = read_manifest("capital\tsemantic\tcapital.txt\n".as_bytes()).unwrap();
        assert_eq!(m[0].group, Group::Semantic);
        assert_eq!(m[0].path, PathBuf::from("capital.txt"));
        assert!(read_manifest("capital\tlexical\tx\n".as_bytes()).is_err());
    }

    #[test]
    fn coverage_full_and_missing() {
        let (corpus, _) = build_corpus(&[spec("c", Group::Syntactic, 3)]).unwrap();
        let words: Vec<Vec<String>> = vec![corpus
            .categories()
            .iter()
            .flat_map(|c| c.questions.iter().flat_map(|q| q.words().map(String::from)))
            .collect()];
        let vocab = build_vocabulary(&words, 1).unwrap();
        let full = validate_corpus(&corpus, &vocab, usize::MAX);
        assert_eq!(full.covered(), full.total());

        // Drop `cx0`: it appears in 4 of the 6 questions.
        let words: Vec<Vec<String>> = vec![words[0].iter().filter(|w| *w != "cx0").cloned().collect()];
        let vocab = build_vocabulary(&words, 1).unwrap();
        let report = validate_corpus(&corpus, &vocab, usize::MAX);
        assert_eq!(report.covered(), 2);
        assert_eq!(report.categories[0].oov_words, BTreeMap::from([("cx0".to_string(), 4)]));
    }

    #[test]
    fn corpus_file_roundtrip() {
        let (corpus, _) = build_corpus(&[spec("s", Group::Semantic, 3), spec("t", Group::Syntactic, 2)]).unwrap();
        let mut text = Vec::new();
        corpus.write(&mut text).unwrap();
        let mut groups_text = Vec::new();
        corpus.write_groups(&mut groups_text).unwrap();
        let groups: HashMap<String, Group> = crate::eval::read_groups(&groups_text[..]).unwrap();
        let (back, defaulted) = AnalogyCorpus::read(&text[..], &groups).unwrap();
        assert!(defaulted.is_empty());
        assert_eq!(back, corpus);
    }
}
