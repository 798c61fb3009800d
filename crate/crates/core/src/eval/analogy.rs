use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::store::VectorStore;

/// Question group a category belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Semantic,
    Syntactic,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Semantic => "semantic",
            Group::Syntactic => "syntactic",
        })
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "semantic" => Ok(Group::Semantic),
            "syntactic" => Ok(Group::Syntactic),
            other => Err(format!("unknown group `{other}` (expected semantic or syntactic)")),
        }
    }
}

/// "a is to b as c is to d"; `d` is the word to predict.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnalogyQuestion {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
}

impl AnalogyQuestion {
    pub fn new(
        a: impl Into<String>,
        b: impl Into<String>,
        c: impl Into<String>,
        d: impl Into<String>,
    ) -> Result<Self> {
        let q = AnalogyQuestion {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        };
        if [&q.a, &q.b, &q.c, &q.d].iter().any(|w| w.is_empty()) {
            return Err(Error::InvalidQuestion("empty word".into()));
        }
        if q.a == q.b || q.c == q.d {
            return Err(Error::InvalidQuestion(format!(
                "`{} {} {} {}` pairs a word with itself",
                q.a, q.b, q.c, q.d
            )));
        }
        Ok(q)
    }

    pub fn words(&self) -> [&str; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    pub group: Group,
    pub questions: Vec<AnalogyQuestion>,
}

/// Ordered analogy categories.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnalogyCorpus {
    categories: Vec<Category>,
}

impl AnalogyCorpus {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        let mut names = HashSet::new();
        for c in &categories {
            if !names.insert(c.name.as_str()) {
                return Err(Error::DuplicateCategory(c.name.clone()));
            }
        }
        Ok(AnalogyCorpus { categories })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn question_count(&self) -> usize {
        self.categories.iter().map(|c| c.questions.len()).sum()
    }

    /// Parse the corpus format: `: name` header lines followed by lines of
    /// four space-separated words. Groups come from `groups`; categories it
    /// does not mention are syntactic and reported in the returned list.
    pub fn read<R: BufRead>(reader: R, groups: &HashMap<String, Group>) -> Result<(Self, Vec<String>)> {
        let mut categories: Vec<Category> = Vec::new();
        let mut defaulted = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix(": ") {
                let name = name.trim().to_owned();
                if name.is_empty() {
                    return Err(Error::parse(line_no, "empty category name"));
                }
                if categories.iter().any(|c| c.name == name) {
                    return Err(Error::DuplicateCategory(name));
                }
                let group = match groups.get(&name) {
                    Some(&g) => g,
                    None => {
                        defaulted.push(name.clone());
                        Group::Syntactic
                    }
                };
                categories.push(Category {
                    name,
                    group,
                    questions: Vec::new(),
                });
                continue;
            }
            let words: Vec<&str> = trimmed.split_whitespace().collect();
            if words.len() != 4 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 4 words, found {}", words.len()),
                ));
            }
            let category = categories
                .last_mut()
                .ok_or_else(|| Error::parse(line_no, "question before the first `: category` header"))?;
            let q = AnalogyQuestion::new(words[0], words[1], words[2], words[3])
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            category.questions.push(q);
        }
        Ok((AnalogyCorpus { categories }, defaulted))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.categories {
            writeln!(out, ": {}", c.name)?;
            for q in &c.questions {
                writeln!(out, "{} {} {} {}", q.a, q.b, q.c, q.d)?;
            }
        }
        Ok(())
    }

    /// Write the group sidecar: `name<TAB>group` per category.
    pub fn write_groups<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.categories {
            writeln!(out, "{}\t{}", c.name, c.group)?;
        }
        Ok(())
    }
}

/// Parse a group sidecar file (`name<TAB>semantic|syntactic`).
pub fn read_groups<R: BufRead>(reader: R) -> Result<HashMap<String, Group>> {
    let mut map = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, group) = trimmed
            .split_once('\t')
            .ok_or_else(|| Error::parse(n + 1, "expected `name<TAB>group`"))?;
        let group = group.parse().map_err(|e: String| Error::parse(n + 1, e))?;
        map.insert(name.trim().to_owned(), group);
    }
    Ok(map)
}

/// Every ordered combination of two distinct pairs: `(x_i, y_i, x_j, y_j)`
/// for `i != j`, `i`-major.
pub fn expand_pairs(pairs: &[(String, String)]) -> Result<Vec<AnalogyQuestion>> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 word pairs to form questions, got {}",
            pairs.len()
        )));
    }
    let mut out = Vec::with_capacity(pairs.len() * (pairs.len() - 1));
    for (i, (xi, yi)) in pairs.iter().enumerate() {
        for (j, (xj, yj)) in pairs.iter().enumerate() {
            if i != j {
                out.push(AnalogyQuestion::new(xi, yi, xj, yj)?);
            }
        }
    }
    Ok(out)
}

/// Outcome of one analogy question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prediction {
    /// A query word is missing or outside the search limit.
    Oov,
    /// Nothing left to rank after exclusions.
    NoCandidate,
    Word(usize),
}

/// Resolve a word (exact, then case-folded) within the first `limit` rows.
pub fn resolve(store: &VectorStore, word: &str, limit: usize) -> Option<usize> {
    store.lookup(word).filter(|&i| i < limit)
}

/// 3CosAdd: the word closest to `unit(b) - unit(a) + unit(c)` among the
/// first `search_limit` words, excluding `a`, `b` and `c`.
pub fn solve_analogy(store: &VectorStore, q: &AnalogyQuestion, search_limit: usize) -> Prediction {
    let limit = search_limit.min(store.len());
    let (a, b, c) = match (
        resolve(store, &q.a, limit),
        resolve(store, &q.b, limit),
        resolve(store, &q.c, limit),
    ) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Prediction::Oov,
    };
    let (ua, ub, uc) = (store.unit_row(a), store.unit_row(b), store.unit_row(c));
    let target: Vec<f32> = (0..store.dim())
        .map(|i| (f64::from(ub[i]) - f64::from(ua[i]) + f64::from(uc[i])) as f32)
        .collect();
    match store
        .nearest(&target, 1, limit, &[a, b, c])
        .expect("target has the store's dimension")
        .first()
    {
        Some(&(idx, _)) => Prediction::Word(idx),
        None => Prediction::NoCandidate,
    }
}

/// Whether `predicted` matches the expected word, exactly or case-folded.
pub fn matches_expected(predicted: &str, expected: &str) -> bool {
    predicted == expected || predicted.to_lowercase() == expected.to_lowercase()
}

/// Per-category analogy results.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryResult {
    pub name: String,
    pub group: Group,
    pub correct: usize,
    pub answered: usize,
    pub total: usize,
}

impl CategoryResult {
    /// Accuracy over answered questions, in percent (0 when none answered).
    pub fn accuracy(&self) -> f64 {
        percent(self.correct, self.answered)
    }
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Analogy accuracy by category and group.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub categories: Vec<CategoryResult>,
    pub search_limit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub correct: usize,
    pub answered: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        percent(self.correct, self.answered)
    }

    pub fn accuracy_with_oov(&self) -> f64 {
        percent(self.correct, self.total)
    }
}

impl EvalReport {
    fn tally(&self, group: Option<Group>) -> Tally {
        self.categories
            .iter()
            .filter(|c| group.map_or(true, |g| c.group == g))
            .fold(Tally::default(), |t, c| Tally {
                correct: t.correct + c.correct,
                answered: t.answered + c.answered,
                total: t.total + c.total,
            })
    }

    pub fn semantic(&self) -> Tally {
        self.tally(Some(Group::Semantic))
    }

    pub fn syntactic(&self) -> Tally {
        self.tally(Some(Group::Syntactic))
    }

    pub fn all(&self) -> Tally {
        self.tally(None)
    }

    /// Question-weighted accuracy over answered semantic questions, percent.
    pub fn semantic_acc(&self) -> f64 {
        self.semantic().accuracy()
    }

    pub fn syntactic_acc(&self) -> f64 {
        self.syntactic().accuracy()
    }

    pub fn all_acc(&self) -> f64 {
        self.all().accuracy()
    }

    /// Accuracy with every discarded (OOV) question counted as wrong.
    pub fn all_acc_with_oov(&self) -> f64 {
        self.all().accuracy_with_oov()
    }

    /// Human-readable table: categories, then group aggregates, then ALL.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        let width = self
            .categories
            .iter()
            .map(|c| c.name.chars().count())
            .chain(std::iter::once(12))
            .max()
            .unwrap_or(12);
        let rule = "-".repeat(width + 36);
        writeln!(out, "{:<width$} {:>9} {:>12} {:>12}", "category", "accuracy", "answered", "total")?;
        writeln!(out, "{rule}")?;
        for group in [Group::Semantic, Group::Syntactic] {
            for c in self.categories.iter().filter(|c| c.group == group) {
                writeln!(
                    out,
                    "{:<width$} {:>9.2} {:>12} {:>12}",
                    c.name,
                    c.accuracy(),
                    c.answered,
                    c.total
                )?;
            }
        }
        writeln!(out, "{rule}")?;
        for (label, t) in [("SEMANTIC", self.semantic()), ("SYNTACTIC", self.syntactic())] {
            writeln!(
                out,
                "{:<width$} {:>9.2} {:>12} {:>12}",
                label,
                t.accuracy(),
                t.answered,
                t.total
            )?;
        }
        writeln!(out, "{rule}")?;
        let all = self.all();
        writeln!(
            out,
            "{:<width$} {:>9.2} {:>12} {:>12}",
            "ALL",
            all.accuracy(),
            all.answered,
            all.total
        )?;
        writeln!(
            out,
            "{:<width$} {:>9.2}",
            "ALL (with OOV)",
            all.accuracy_with_oov()
        )?;
        Ok(())
    }

    /// Machine-readable `key=value` lines.
    pub fn write_kv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "search_limit={}", self.search_limit)?;
        for c in &self.categories {
            writeln!(out, "category.{}.group={}", c.name, c.group)?;
            writeln!(out, "category.{}.accuracy={:.2}", c.name, c.accuracy())?;
            writeln!(out, "category.{}.correct={}", c.name, c.correct)?;
            writeln!(out, "category.{}.answered={}", c.name, c.answered)?;
            writeln!(out, "category.{}.total={}", c.name, c.total)?;
        }
        for (key, t) in [
            ("semantic", self.semantic()),
            ("syntactic", self.syntactic()),
            ("all", self.all()),
        ] {
            writeln!(out, "{key}_acc={:.2}", t.accuracy())?;
            writeln!(out, "{key}_correct={}", t.correct)?;
            writeln!(out, "{key}_answered={}", t.answered)?;
            writeln!(out, "{key}_total={}", t.total)?;
        }
        writeln!(out, "all_acc_with_oov={:.2}", self.all_acc_with_oov())?;
        Ok(())
    }
}

/// Answer every question of `corpus` and tally accuracy per category.
/// Questions with any of their four words missing or beyond `search_limit`
/// are discarded (not answered).
pub fn evaluate_analogies(
    store: &VectorStore,
    corpus: &AnalogyCorpus,
    search_limit: usize,
    workers: usize,
) -> Result<EvalReport> {
    if corpus.question_count() == 0 {
        return Err(Error::EmptyCorpus("analogy corpus has no questions".into()));
    }
    // Build the normalized view once before sharing.
    store.normalized();
    let mut categories = Vec::with_capacity(corpus.categories().len());
    for cat in corpus.categories() {
        let (correct, answered) = score_questions(store, &cat.questions, search_limit, workers);
        categories.push(CategoryResult {
            name: cat.name.clone(),
            group: cat.group,
            correct,
            answered,
            total: cat.questions.len(),
        });
    }
    Ok(EvalReport {
        categories,
        search_limit,
    })
}

fn score_questions(
    store: &VectorStore,
    questions: &[AnalogyQuestion],
    search_limit: usize,
    workers: usize,
) -> (usize, usize) {
    let limit = search_limit.min(store.len());
    let score = |qs: &[AnalogyQuestion]| {
        let mut correct = 0;
        let mut answered = 0;
        for q in qs {
            // A question whose answer cannot be retrieved is discarded too.
            if resolve(store, &q.d, limit).is_none() {
                continue;
            }
            match solve_analogy(store, q, search_limit) {
                Prediction::Oov => {}
                Prediction::NoCandidate => answered += 1,
                Prediction::Word(idx) => {
                    answered += 1;
                    if matches_expected(store.word(idx), &q.d) {
                        correct += 1;
                    }
                }
            }
        }
        (correct, answered)
    };
    let workers = workers.max(1);
    if workers == 1 || questions.len() < 2 * workers {
        return score(questions);
    }
    let chunk = questions.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = questions
            .chunks(chunk)
            .map(|qs| scope.spawn(move || score(qs)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .fold((0, 0), |(c, a), (c2, a2)| (c + c2, a + a2))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(p: &[(&str, &str)]) -> Vec<(String, String)> {
        p.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn expand_two_pairs() {
        let qs = expand_pairs(&pairs(&[("a", "b"), ("c", "d")])).unwrap();
        assert_eq!(
            qs,
            vec![
                AnalogyQuestion::new("a", "b", "c", "d").unwrap(),
                AnalogyQuestion::new("c", "d", "a", "b").unwrap(),
            ]
        );
    }

    #[test]
    fn expand_counts() {
        let p: Vec<(String, String)> = (0..23).map(|i| (format!("x{i}"), format!("y{i}"))).collect();
        assert_eq!(expand_pairs(&p).unwrap().len(), 506);
        assert!(matches!(
            expand_pairs(&pairs(&[("a", "b")])),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn question_invariants() {
        assert!(AnalogyQuestion::new("a", "a", "c", "d").is_err());
        assert!(AnalogyQuestion::new("a", "b", "", "d").is_err());
    }

    #[test]
    fn corpus_parse_and_write() {
        let text = ": capitals\nAthens Greece Oslo Norway\n: plural\ncat cats dog dogs\n";
        let mut groups = HashMap::new();
        groups.insert("capitals".to_string(), Group::Semantic);
        let (corpus, defaulted) = AnalogyCorpus::read(text.as_bytes(), &groups).unwrap();
        assert_eq!(defaulted, vec!["plural"]);
        assert_eq!(corpus.categories()[0].group, Group::Semantic);
        assert_eq!(corpus.categories()[1].group, Group::Syntactic);
        let mut out = Vec::new();
        corpus.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn corpus_parse_errors() {
        let none = HashMap::new();
        let err = AnalogyCorpus::read("a b c d\n".as_bytes(), &none).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = AnalogyCorpus::read(": x\na b c\n".as_bytes(), &none).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = AnalogyCorpus::read(": x\n: x\n".as_bytes(), &none).unwrap_err();
        assert!(matches!(err, Error::DuplicateCategory(_)));
    }

    #[test]
    fn groups_sidecar() {
        let g = read_groups("family\tsemantic\n# c\nplural\tsyntactic\n".as_bytes()).unwrap();
        assert_eq!(g["family"], Group::Semantic);
        assert_eq!(g["plural"], Group::Syntactic);
        assert!(read_groups("family semantic\n".as_bytes()).is_err());
        assert!(read_groups("family\tlexical\n".as_bytes()).is_err());
    }

    /// Rows chosen so that unit(d) = unit(b) - unit(a) + unit(c) exactly.
    fn identity_store() -> VectorStore {
        let words = ["man", "king", "woman", "queen", "apple"];
        let rows: [[f32; 3]; 5] = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            // unit(queen) = (-1, 1, 1)/sqrt(3) = king - man + woman, scaled
            [-1.0, 1.0, 1.0],
            [1.0, 1.0, -1.0],
        ];
        VectorStore::from_words(words, 3, rows.concat()).unwrap()
    }

    #[test]
    fn constructed_identity_is_solved() {
        let s = identity_store();
        let q = AnalogyQuestion::new("man", "king", "woman", "queen").unwrap();
        assert_eq!(solve_analogy(&s, &q, 5), Prediction::Word(3));
        // Case-folded lookup of query words.
        let q = AnalogyQuestion::new("Man", "KING", "woman", "Queen").unwrap();
        assert_eq!(solve_analogy(&s, &q, 5), Prediction::Word(3));
        assert!(matches_expected("queen", "Queen"));
    }

    #[test]
    fn oov_and_limit() {
        let s = identity_store();
        let q = AnalogyQuestion::new("man", "king", "girl", "queen").unwrap();
        assert_eq!(solve_analogy(&s, &q, 5), Prediction::Oov);
        let q = AnalogyQuestion::new("man", "king", "woman", "queen").unwrap();
        assert_eq!(solve_analogy(&s, &q, 2), Prediction::Oov);
        // With limit 3 every candidate is excluded.
        assert_eq!(solve_analogy(&s, &q, 3), Prediction::NoCandidate);
    }

    #[test]
    fn report_arithmetic() {
        let s = identity_store();
        let mut groups = HashMap::new();
        groups.insert("royal".to_string(), Group::Semantic);
        let text = ": royal\nman king woman queen\nman king girl queen\n";
        let (corpus, _) = AnalogyCorpus::read(text.as_bytes(), &groups).unwrap();
        let r = evaluate_analogies(&s, &corpus, 5, 1).unwrap();
        assert_eq!(r.categories[0].answered, 1);
        assert_eq!(r.categories[0].total, 2);
        assert_eq!(r.all_acc(), 100.0);
        assert_eq!(r.all_acc_with_oov(), 50.0);
        assert_eq!(r.semantic_acc(), 100.0);
        assert_eq!(r.syntactic_acc(), 0.0);

        let mut kv = Vec::new();
        r.write_kv(&mut kv).unwrap();
        let kv = String::from_utf8(kv).unwrap();
        assert!(kv.contains("all_acc=100.00\n"));
        assert!(kv.contains("all_acc_with_oov=50.00\n"));
        let mut table = Vec::new();
        r.write_table(&mut table).unwrap();
        let table = String::from_utf8(table).unwrap();
        assert!(table.contains("royal"));
        assert!(table.contains("100.00"));
    }

    #[test]
    fn unreachable_answer_is_discarded() {
        let s = identity_store();
        let text = ": royal\nman king woman queen\nman king woman princess\n";
        let (corpus, _) = AnalogyCorpus::read(text.as_bytes(), &HashMap::new()).unwrap();
        let r = evaluate_analogies(&s, &corpus, 5, 1).unwrap();
        assert_eq!((r.categories[0].correct, r.categories[0].answered), (1, 1));
        // queen sits at index 3, outside a limit of 3.
        let r = evaluate_analogies(&s, &corpus, 3, 1).unwrap();
        assert_eq!(r.categories[0].answered, 0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let s = identity_store();
        let corpus = AnalogyCorpus::default();
        assert!(matches!(evaluate_analogies(&s, &corpus, 5, 1), Err(Error::EmptyCorpus(_))));
    }
}
