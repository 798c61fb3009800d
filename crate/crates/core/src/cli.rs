//! Command-line front end: preprocess → train → evaluate.
//!
//! Exit status is 0 on success, 1 on domain failures (unknown query word,
//! numeric instability, undefined correlation) and 2 on input and
//! configuration errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    build_vocabulary_parallel, filter_sentences, read_sentences, Sentence, Vocabulary,
    MIN_SENTENCE_TOKENS,
};
use crate::corpus_tools::{build_corpus, load_manifest, validate_corpus};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_analogies, evaluate_similarity, read_groups, read_similarity_pairs, AnalogyCorpus,
    DEFAULT_SEARCH_LIMIT,
};
use crate::store::VectorStore;
use crate::trainer::{train, ModelConfig, ModelKind, Progress};

#[derive(Debug, Parser)]
#[command(name = "embedkit", version, about = "Train and evaluate word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize raw text and keep sentences with enough tokens.
    Preprocess(PreprocessArgs),
    /// Build the vocabulary and train word vectors.
    Train(TrainArgs),
    /// Analogy accuracy per category.
    EvalAnalogy(EvalAnalogyArgs),
    /// Rank correlation with human similarity judgments.
    EvalSimilarity(EvalSimilarityArgs),
    /// Nearest neighbors of a word.
    Nn(NnArgs),
    /// Expand category pair lists into an analogy corpus.
    BuildCorpus(BuildCorpusArgs),
    /// Vocabulary coverage of an analogy corpus.
    ValidateCorpus(ValidateCorpusArgs),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long, default_value_t = MIN_SENTENCE_TOKENS)]
    min_sentence_len: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Preprocessed corpus, one sentence per line.
    corpus: PathBuf,
    /// Output vectors (word2vec text format).
    output: PathBuf,
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// cbow, skipgram, fasttext-skip or fasttext-cbow.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    subword: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    negatives: Option<String>,
    #[arg(long = "lr")]
    initial_lr: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    min_count: Option<String>,
    #[arg(long = "subsample")]
    subsample_t: Option<String>,
    #[arg(long)]
    minn: Option<String>,
    #[arg(long)]
    maxn: Option<String>,
    #[arg(long)]
    buckets: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Additional `key=value` assignments, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Also write the vocabulary (`word<TAB>count`).
    #[arg(long)]
    vocab_dump: Option<PathBuf>,
    /// Write the effective configuration.
    #[arg(long)]
    save_config: Option<PathBuf>,
    /// No progress reports on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct EvalAnalogyArgs {
    vectors: PathBuf,
    corpus: PathBuf,
    /// Sidecar mapping `category<TAB>semantic|syntactic`.
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Search only the most frequent N words.
    #[arg(long, default_value_t = DEFAULT_SEARCH_LIMIT)]
    top: usize,
    /// Write the key=value dump here instead of after the table.
    #[arg(long)]
    kv: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalSimilarityArgs {
    vectors: PathBuf,
    pairs: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    scale_min: f64,
    #[arg(long, default_value_t = 10.0)]
    scale_max: f64,
    /// Print per-pair cosines (`*` marks OOV words).
    #[arg(long)]
    detail: bool,
}

#[derive(Debug, Args)]
struct NnArgs {
    vectors: PathBuf,
    word: String,
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_SEARCH_LIMIT)]
    top: usize,
}

#[derive(Debug, Args)]
struct BuildCorpusArgs {
    /// Manifest with `name<TAB>group<TAB>pair-list-path` lines.
    manifest: PathBuf,
    output: PathBuf,
    /// Where to write the group sidecar (default: OUTPUT.groups).
    #[arg(long)]
    groups_out: Option<PathBuf>,
    #[arg(long)]
    expect_semantic: Option<usize>,
    #[arg(long)]
    expect_syntactic: Option<usize>,
    #[arg(long)]
    expect_total: Option<usize>,
}

#[derive(Debug, Args)]
struct ValidateCorpusArgs {
    corpus: PathBuf,
    /// Vectors file providing the vocabulary.
    #[arg(long, conflicts_with = "vocab", required_unless_present = "vocab")]
    vectors: Option<PathBuf>,
    /// Vocabulary dump (`word<TAB>count`).
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEARCH_LIMIT)]
    top: usize,
}

/// Parse `args` (including the program name) and run the subcommand.
/// Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Preprocess(a) => cmd_preprocess(&a, out),
        Command::Train(a) => cmd_train(&a, out, err),
        Command::EvalAnalogy(a) => cmd_eval_analogy(&a, out, err),
        Command::EvalSimilarity(a) => cmd_eval_similarity(&a, out),
        Command::Nn(a) => cmd_nn(&a, out),
        Command::BuildCorpus(a) => cmd_build_corpus(&a, out, err),
        Command::ValidateCorpus(a) => cmd_validate_corpus(&a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn load_store(path: &Path) -> Result<VectorStore> {
    VectorStore::read_text(open(path)?).map_err(|e| e.in_file(path))
}

fn load_analogy_corpus(path: &Path, groups: Option<&Path>, err: &mut dyn Write) -> Result<AnalogyCorpus> {
    let groups = match groups {
        Some(g) => read_groups(open(g)?).map_err(|e| e.in_file(g))?,
        None => Default::default(),
    };
    let (corpus, defaulted) = AnalogyCorpus::read(open(path)?, &groups).map_err(|e| e.in_file(path))?;
    if !defaulted.is_empty() {
        let _ = writeln!(
            err,
            "warning: no group given for {} categor{}; treating as syntactic: {}",
            defaulted.len(),
            if defaulted.len() == 1 { "y" } else { "ies" },
            defaulted.join(", ")
        );
    }
    Ok(corpus)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Read, tokenize and length-filter a corpus file.
pub fn read_corpus(path: &Path, min_len: usize) -> Result<(Vec<Sentence>, usize)> {
    let mut kept = Vec::new();
    let mut lines = 0;
    for s in read_sentences(open(path)?) {
        let s = s.map_err(|e| e.in_file(path))?;
        lines += 1;
        kept.extend(filter_sentences(std::iter::once(s), min_len));
    }
    Ok((kept, lines))
}

fn cmd_preprocess(a: &PreprocessArgs, out: &mut dyn Write) -> Result<()> {
    let reader = open(&a.input)?;
    let mut writer = create(&a.output)?;
    let (mut lines, mut sentences, mut tokens) = (0u64, 0u64, 0u64);
    for s in read_sentences(reader) {
        let s = s.map_err(|e| e.in_file(&a.input))?;
        lines += 1;
        if s.len() >= a.min_sentence_len {
            sentences += 1;
            tokens += s.len() as u64;
            writeln!(writer, "{}", s.join(" ")).map_err(|e| Error::io(&a.output, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(&a.output, e))?;
    writeln!(out, "lines_read={lines}")?;
    writeln!(out, "sentences={sentences}")?;
    writeln!(out, "tokens={tokens}")?;
    Ok(())
}

fn train_config(a: &TrainArgs) -> Result<ModelConfig> {
    let mut pairs: Vec<(String, String)> = match &a.config {
        Some(path) => ModelConfig::read_pairs(open(path)?).map_err(|e| e.in_file(path))?,
        None => Vec::new(),
    };
    if let Some(model) = &a.model {
        let kind: ModelKind = model.parse().map_err(|reason| Error::InvalidConfigValue {
            key: "model".into(),
            value: model.clone(),
            reason,
        })?;
        let (mode, subword) = kind.mode_and_subword();
        pairs.push(("mode".into(), mode.to_string()));
        pairs.push(("subword".into(), if subword { "on" } else { "off" }.into()));
    }
    let flags = [
        ("mode", &a.mode),
        ("subword", &a.subword),
        ("dim", &a.dim),
        ("window", &a.window),
        ("negatives", &a.negatives),
        ("initial_lr", &a.initial_lr),
        ("epochs", &a.epochs),
        ("min_count", &a.min_count),
        ("subsample_t", &a.subsample_t),
        ("minn", &a.minn),
        ("maxn", &a.maxn),
        ("buckets", &a.buckets),
        ("seed", &a.seed),
        ("workers", &a.workers),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            pairs.push((key.into(), v.clone()));
        }
    }
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::InvalidConfigValue {
            key: "set".into(),
            value: kv.clone(),
            reason: "expected KEY=VALUE".into(),
        })?;
        pairs.push((k.trim().into(), v.trim().into()));
    }
    if !pairs.iter().any(|(k, _)| k == "workers") {
        pairs.push(("workers".into(), default_workers().to_string()));
    }
    ModelConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> Result<()> {
    let config = train_config(a)?;
    // Validate every path before the long-running part.
    let corpus_reader = open(&a.corpus)?;
    drop(corpus_reader);
    let mut writer = create(&a.output)?;
    let mut dump = a.vocab_dump.as_deref().map(create).transpose()?;
    if let Some(path) = &a.save_config {
        let mut w = create(path)?;
        config.write(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }

    let (sentences, _) = read_corpus(&a.corpus, 1)?;
    let vocab = build_vocabulary_parallel(&sentences, config.min_count, config.workers)?;
    if let Some(w) = dump.as_mut() {
        vocab.write_dump(&mut *w)?;
        w.flush()?;
    }
    writeln!(out, "vocab_size={}", vocab.len())?;
    writeln!(out, "train_tokens={}", vocab.total_tokens())?;

    let quiet = a.quiet;
    let report = std::sync::Mutex::new(err);
    let progress = move |p: &Progress| {
        if quiet {
            return;
        }
        let mut e = report.lock().expect("stderr lock");
        let pct = 100.0 * p.processed_tokens as f64 / p.total_tokens.max(1) as f64;
        let _ = writeln!(
            e,
            "epoch {:>2} {:6.2}%  lr {:.6}  {:>9.0} tokens/s  loss {:.4}{}",
            p.epoch + 1,
            pct,
            p.lr,
            p.tokens_per_sec,
            p.epoch_mean_loss,
            if p.epoch_finished { "  (epoch mean)" } else { "" }
        );
    };
    let (store, losses) = train(&sentences, &vocab, &config, &progress)?;
    for (i, l) in losses.iter().enumerate() {
        writeln!(out, "epoch_{}_loss={l:.6}", i + 1)?;
    }
    store.write_text(&mut writer)?;
    writer.flush().map_err(|e| Error::io(&a.output, e))?;
    writeln!(out, "dim={}", store.dim())?;
    Ok(())
}

fn cmd_eval_analogy(a: &EvalAnalogyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let store = load_store(&a.vectors)?;
    let corpus = load_analogy_corpus(&a.corpus, a.groups.as_deref(), err)?;
    let mut kv_file = a.kv.as_deref().map(create).transpose()?;
    let workers = a.workers.unwrap_or_else(default_workers);
    let report = evaluate_analogies(&store, &corpus, a.top, workers)?;
    report.write_table(&mut *out)?;
    match kv_file.as_mut() {
        Some(w) => {
            report.write_kv(&mut *w)?;
            w.flush()?;
        }
        None => {
            writeln!(out)?;
            report.write_kv(&mut *out)?;
        }
    }
    Ok(())
}

fn cmd_eval_similarity(a: &EvalSimilarityArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.scale_min < a.scale_max) {
        return Err(Error::Config(format!(
            "scale bounds must satisfy min < max, got [{}, {}]",
            a.scale_min, a.scale_max
        )));
    }
    let store = load_store(&a.vectors)?;
    let pairs = read_similarity_pairs(open(&a.pairs)?, a.scale_min, a.scale_max)
        .map_err(|e| e.in_file(&a.pairs))?;
    let report = evaluate_similarity(&store, &pairs)?;
    if a.detail {
        report.write_detail(&mut *out)?;
    }
    writeln!(out, "pairs={}", report.pairs.len())?;
    writeln!(out, "oov_words={}", report.oov_words())?;
    writeln!(out, "spearman={:.2}", report.score)?;
    Ok(())
}

fn cmd_nn(a: &NnArgs, out: &mut dyn Write) -> Result<()> {
    let store = load_store(&a.vectors)?;
    let idx = match store.lookup(&a.word) {
        Some(i) => i,
        None => {
            let folded = a.word.to_lowercase();
            let mut suggestions: Vec<(usize, usize)> = store
                .vocab()
                .words()
                .iter()
                .enumerate()
                .filter_map(|(i, w)| {
                    let d = strsim::levenshtein(&w.to_lowercase(), &folded);
                    (d <= 2).then_some((d, i))
                })
                .collect();
            suggestions.sort();
            suggestions.truncate(10);
            return Err(Error::UnknownWord {
                word: a.word.clone(),
                suggestions: suggestions
                    .into_iter()
                    .map(|(_, i)| store.word(i).to_owned())
                    .collect(),
            });
        }
    };
    for (i, sim) in store.nearest(store.row(idx), a.k, a.top, &[idx])? {
        writeln!(out, "{}\t{:.6}", store.word(i), sim)?;
    }
    Ok(())
}

fn cmd_build_corpus(a: &BuildCorpusArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let specs = load_manifest(&a.manifest)?;
    let groups_path = a.groups_out.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".groups");
        PathBuf::from(p)
    });
    let (corpus, stats) = build_corpus(&specs)?;
    let mut w = create(&a.output)?;
    corpus.write(&mut w)?;
    w.flush().map_err(|e| Error::io(&a.output, e))?;
    let mut g = create(&groups_path)?;
    corpus.write_groups(&mut g)?;
    g.flush().map_err(|e| Error::io(&groups_path, e))?;
    write!(out, "{}", stats.summary())?;
    for msg in stats.discrepancies(a.expect_semantic, a.expect_syntactic, a.expect_total) {
        writeln!(err, "warning: {msg}")?;
    }
    Ok(())
}

fn cmd_validate_corpus(a: &ValidateCorpusArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let vocab: Vocabulary = match (&a.vectors, &a.vocab) {
        (Some(v), _) => load_store(v)?.vocab().clone(),
        (None, Some(path)) => Vocabulary::read_dump(open(path)?).map_err(|e| e.in_file(path))?,
        (None, None) => unreachable!("clap requires one of --vectors/--vocab"),
    };
    let corpus = load_analogy_corpus(&a.corpus, a.groups.as_deref(), err)?;
    let report = validate_corpus(&corpus, &vocab, a.top);
    write!(out, "{}", report.render())?;
    Ok(())
}
