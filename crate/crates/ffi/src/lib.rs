//! C ABI over `embedkit`.
//!
//! Every fallible function returns an [`EkStatus`]; on failure the message
//! is available from [`ek_last_error_message`] on the same thread until the
//! next failing call. Vector stores are opaque [`EkStore`] handles created by
//! [`ek_store_load`] or [`ek_train_file`] and released with
//! [`ek_store_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use embedkit::corpus::{build_vocabulary, MIN_SENTENCE_TOKENS};
use embedkit::eval::{self, Prediction};
use embedkit::store::{cosine, VectorStore};
use embedkit::trainer::{self, ModelConfig};
use embedkit::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EkStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    NotFound = 6,
    Domain = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque vector store handle.
pub struct EkStore {
    inner: VectorStore,
}

/// Aggregate analogy results. Accuracies are percentages.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EkAnalogySummary {
    pub semantic_correct: usize,
    pub semantic_answered: usize,
    pub semantic_total: usize,
    pub syntactic_correct: usize,
    pub syntactic_answered: usize,
    pub syntactic_total: usize,
    pub semantic_acc: f64,
    pub syntactic_acc: f64,
    pub all_acc: f64,
    pub all_acc_with_oov: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EkStatus {
    match err {
        Error::Io { .. } | Error::Stream(_) => EkStatus::Io,
        Error::Decode { .. } => EkStatus::InvalidUtf8,
        Error::Parse { .. } | Error::DuplicateWord { .. } | Error::DuplicateCategory(_) | Error::InvalidQuestion(_) => {
            EkStatus::Parse
        }
        Error::Config(_) | Error::UnknownConfigKey { .. } | Error::InvalidConfigValue { .. } => EkStatus::Config,
        Error::UnknownWord { .. } => EkStatus::NotFound,
        _ => EkStatus::Domain,
    }
}

struct Failure(EkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Run `f`, converting errors and panics into a status code.
fn guard<F>(f: F) -> EkStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EkStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            EkStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(EkStatus::NullArgument, format!("`{name}` is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(EkStatus::InvalidUtf8, format!("`{name}` is not UTF-8: {e}")))
}

unsafe fn store_arg<'a>(p: *const EkStore) -> Result<&'a VectorStore, Failure> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("store"))
}

fn io_err(path: &str, e: std::io::Error) -> Failure {
    Failure(EkStatus::Io, format!("{path}: {e}"))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ek_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ek_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Load a word2vec text file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ek_store_load(path: *const c_char, out: *mut *mut EkStore) -> EkStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let inner = VectorStore::read_text(BufReader::new(file))?;
        *out = Box::into_raw(Box::new(EkStore { inner }));
        Ok(())
    })
}

/// Release a store. NULL is ignored.
///
/// # Safety
/// `store` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ek_store_free(store: *mut EkStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Write a store in word2vec text format.
///
/// # Safety
/// Pointers must be valid; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ek_store_save(store: *const EkStore, path: *const c_char) -> EkStatus {
    guard(|| {
        let store = store_arg(store)?;
        let path = str_arg(path, "path")?;
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = BufWriter::new(file);
        store.write_text(&mut w)?;
        w.flush().map_err(|e| io_err(path, e))?;
        Ok(())
    })
}

/// Number of words; 0 for NULL.
///
/// # Safety
/// `store` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ek_store_len(store: *const EkStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.len())
}

/// Vector dimension; 0 for NULL.
///
/// # Safety
/// `store` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ek_store_dim(store: *const EkStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.dim())
}

/// Index of `word` (exact match, then case-folded). Returns
/// `EK_STATUS_NOT_FOUND` when absent.
///
/// # Safety
/// Pointers must be valid; `word` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ek_store_lookup(store: *const EkStore, word: *const c_char, out_index: *mut usize) -> EkStatus {
    guard(|| {
        let store = store_arg(store)?;
        let word = str_arg(word, "word")?;
        if out_index.is_null() {
            return Err(null("out_index"));
        }
        match store.lookup(word) {
            Some(i) => {
                *out_index = i;
                Ok(())
            }
            None => Err(Failure(EkStatus::NotFound, format!("word `{word}` not found"))),
        }
    })
}

/// Copy word `index` into `buf` as a NUL-terminated string. `out_len`
/// receives the byte length without the terminator, also when the buffer
/// is too small.
///
/// # Safety
/// `buf` must point to `buf_len` writable bytes (or be NULL with
/// `buf_len == 0`).
#[no_mangle]
pub unsafe extern "C" fn ek_store_word(
    store: *const EkStore,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
    out_len: *mut usize,
) -> EkStatus {
    guard(|| {
        let store = store_arg(store)?;
        if index >= store.len() {
            return Err(Failure(EkStatus::NotFound, format!("index {index} out of range")));
        }
        let word = store.word(index).as_bytes();
        if !out_len.is_null() {
            *out_len = word.len();
        }
        if buf.is_null() || buf_len < word.len() + 1 {
            return Err(Failure(
                EkStatus::BufferTooSmall,
                format!("need {} bytes", word.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(word.as_ptr() as *const c_char, buf, word.len());
        *buf.add(word.len()) = 0;
        Ok(())
    })
}

/// Copy the vector of word `index` into `out` (`len` must equal the
/// dimension).
///
/// # Safety
/// `out` must point to `len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn ek_store_vector(store: *const EkStore, index: usize, out: *mut f32, len: usize) -> EkStatus {
    guard(|| {
        let store = store_arg(store)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if index >= store.len() {
            return Err(Failure(EkStatus::NotFound, format!("index {index} out of range")));
        }
        if len != store.dim() {
            return Err(Failure(
                EkStatus::BufferTooSmall,
                format!("buffer holds {len} floats, dimension is {}", store.dim()),
            ));
        }
        ptr::copy_nonoverlapping(store.row(index).as_ptr(), out, len);
        Ok(())
    })
}

/// Cosine similarity of two vectors of length `dim`.
///
/// # Safety
/// `u` and `v` must point to `dim` floats.
#[no_mangle]
pub unsafe extern "C" fn ek_cosine(u: *const f32, v: *const f32, dim: usize, out: *mut f64) -> EkStatus {
    guard(|| {
        if u.is_null() || v.is_null() || out.is_null() {
            return Err(null("u/v/out"));
        }
        let u = std::slice::from_raw_parts(u, dim);
        let v = std::slice::from_raw_parts(v, dim);
        *out = cosine(u, v)?;
        Ok(())
    })
}

/// Top-`k` neighbors of `query` among the first `search_limit` words,
/// skipping the `n_exclude` indices in `exclude`. Results are written to
/// `out_indices`/`out_sims` (capacity `k`), count to `out_count`.
///
/// # Safety
/// Buffers must be valid for the given lengths; `exclude` may be NULL when
/// `n_exclude` is 0.
#[no_mangle]
pub unsafe extern "C" fn ek_store_nearest(
    store: *const EkStore,
    query: *const f32,
    dim: usize,
    k: usize,
    search_limit: usize,
    exclude: *const usize,
    n_exclude: usize,
    out_indices: *mut usize,
    out_sims: *mut f64,
    out_count: *mut usize,
) -> EkStatus {
    guard(|| {
        let store = store_arg(store)?;
        if query.is_null() || out_count.is_null() || (k > 0 && (out_indices.is_null() || out_sims.is_null())) {
            return Err(null("query/out buffers"));
        }
        let query = std::slice::from_raw_parts(query, dim);
        let exclude: &[usize] = if n_exclude == 0 {
            &[]
        } else if exclude.is_null() {
            return Err(null("exclude"));
        } else {
            std::slice::from_raw_parts(exclude, n_exclude)
        };
        let hits = store.nearest(query, k, search_limit, exclude)?;
        for (i, (idx, sim)) in hits.iter().enumerate() {
            *out_indices.add(i) = *idx;
            *out_sims.add(i) = *sim;
        }
        *out_count = hits.len();
        Ok(())
    })
}

/// Solve "a is to b as c is to ?" with 3CosAdd. On success `out_oov` is 1
/// when a query word is unknown or beyond `search_limit` (then `out_index`
/// is untouched), else 0.
///
/// # Safety
/// Strings must be NUL-terminated; out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn ek_solve_analogy(
    store: *const EkStore,
    a: *const c_char,
    b: *const c_char,
    c: *const c_char,
    search_limit: usize,
    out_index: *mut usize,
    out_oov: *mut c_int,
) -> EkStatus {
    guard(|| {
        let store = store_arg(store)?;
        let (a, b, c) = (str_arg(a, "a")?, str_arg(b, "b")?, str_arg(c, "c")?);
        if out_index.is_null() || out_oov.is_null() {
            return Err(null("out_index/out_oov"));
        }
        // `d` only has to differ from `c` for the question to be valid.
        let q = eval::AnalogyQuestion {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: String::new(),
        };
        match eval::solve_analogy(store, &q, search_limit) {
            Prediction::Word(i) => {
                *out_index = i;
                *out_oov = 0;
                Ok(())
            }
            Prediction::Oov => {
                *out_oov = 1;
                Ok(())
            }
            Prediction::NoCandidate => Err(Failure(
                EkStatus::NotFound,
                "no candidate words left after exclusions".into(),
            )),
        }
    })
}

/// Evaluate an analogy corpus file. `groups_path` may be NULL, in which case
/// every category counts as syntactic.
///
/// # Safety
/// Strings must be NUL-terminated (or NULL where allowed); `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ek_evaluate_analogies(
    store: *const EkStore,
    corpus_path: *const c_char,
    groups_path: *const c_char,
    search_limit: usize,
    workers: usize,
    out: *mut EkAnalogySummary,
) -> EkStatus {
    guard(|| {
        let store = store_arg(store)?;
        let corpus_path = str_arg(corpus_path, "corpus_path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let groups = if groups_path.is_null() {
            Default::default()
        } else {
            let p = str_arg(groups_path, "groups_path")?;
            let f = File::open(p).map_err(|e| io_err(p, e))?;
            eval::read_groups(BufReader::new(f))?
        };
        let f = File::open(corpus_path).map_err(|e| io_err(corpus_path, e))?;
        let (corpus, _) = eval::AnalogyCorpus::read(BufReader::new(f), &groups)?;
        let report = eval::evaluate_analogies(store, &corpus, search_limit, workers.max(1))?;
        let (sem, syn) = (report.semantic(), report.syntactic());
        *out = EkAnalogySummary {
            semantic_correct: sem.correct,
            semantic_answered: sem.answered,
            semantic_total: sem.total,
            syntactic_correct: syn.correct,
            syntactic_answered: syn.answered,
            syntactic_total: syn.total,
            semantic_acc: report.semantic_acc(),
            syntactic_acc: report.syntactic_acc(),
            all_acc: report.all_acc(),
            all_acc_with_oov: report.all_acc_with_oov(),
        };
        Ok(())
    })
}

/// Spearman correlation (x100) between a similarity file's human scores and
/// the store's cosines.
///
/// # Safety
/// `pairs_path` must be NUL-terminated; `out_score` valid.
#[no_mangle]
pub unsafe extern "C" fn ek_evaluate_similarity(
    store: *const EkStore,
    pairs_path: *const c_char,
    scale_min: f64,
    scale_max: f64,
    out_score: *mut f64,
) -> EkStatus {
    guard(|| {
        let store = store_arg(store)?;
        let path = str_arg(pairs_path, "pairs_path")?;
        if out_score.is_null() {
            return Err(null("out_score"));
        }
        let f = File::open(path).map_err(|e| io_err(path, e))?;
        let pairs = eval::read_similarity_pairs(BufReader::new(f), scale_min, scale_max)?;
        *out_score = eval::evaluate_similarity(store, &pairs)?.score;
        Ok(())
    })
}

/// Train on a corpus file (one sentence per line; sentences shorter than
/// five tokens are skipped) using a key=value configuration file, which may
/// be NULL for defaults. The vectors are written to `output_path` when it is
/// not NULL and returned through `out` when it is not NULL.
///
/// # Safety
/// Strings must be NUL-terminated (or NULL where allowed).
#[no_mangle]
pub unsafe extern "C" fn ek_train_file(
    corpus_path: *const c_char,
    config_path: *const c_char,
    output_path: *const c_char,
    out: *mut *mut EkStore,
) -> EkStatus {
    guard(|| {
        let corpus_path = str_arg(corpus_path, "corpus_path")?;
        let config = if config_path.is_null() {
            ModelConfig::default()
        } else {
            let p = str_arg(config_path, "config_path")?;
            let f = File::open(p).map_err(|e| io_err(p, e))?;
            ModelConfig::read(BufReader::new(f))?
        };
        let output = if output_path.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(output_path, "output_path")?))
        };
        let f = File::open(corpus_path).map_err(|e| io_err(corpus_path, e))?;
        let sentences = embedkit::corpus::filter_sentences(
            embedkit::corpus::read_sentences(BufReader::new(f)).collect::<Result<Vec<_>, _>>()?,
            MIN_SENTENCE_TOKENS,
        )
        .collect::<Vec<_>>();
        let vocab = build_vocabulary(&sentences, config.min_count)?;
        let (store, _) = trainer::train(&sentences, &vocab, &config, &trainer::no_progress)?;
        if let Some(path) = output {
            let file = File::create(&path).map_err(|e| io_err(&path.display().to_string(), e))?;
            let mut w = BufWriter::new(file);
            store.write_text(&mut w)?;
            w.flush().map_err(|e| io_err(&path.display().to_string(), e))?;
        }
        if !out.is_null() {
            *out = Box::into_raw(Box::new(EkStore { inner: store }));
        }
        Ok(())
    })
}
