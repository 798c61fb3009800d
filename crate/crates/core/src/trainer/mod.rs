//! CBOW and Skip-gram training with negative sampling, optionally with
//! hashed character n-gram vectors.
//!
//! Workers share the parameter matrices and update them without locks. With
//! `workers = 1` a run is fully determined by the seed.

mod config;
mod params;
mod steps;
mod subword;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use self::config::{Mode, ModelConfig, ModelKind};
pub use self::params::{init_parameters, HogwildMatrix, ParameterMatrices, Real};
pub use self::steps::{
    cbow_step, cbow_update, context_positions, lr_schedule, negative_sampling_step, sample_negatives,
    sample_window, skipgram_step, skipgram_update, train_position, word_representation, NonFinite,
    Projection, Scratch, StepContext, StepLoss, MIN_LR_FRACTION,
};
pub use self::subword::{extract_ngrams, hash_ngram, WordRows};

use crate::corpus::{build_noise_table, keep_probability, Sentence, Vocabulary};
use crate::error::{Error, Result};
use crate::store::VectorStore;

/// Sentences mapped to vocabulary indices; out-of-vocabulary tokens removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedCorpus {
    sentences: Vec<Vec<u32>>,
    tokens: u64,
}

impl IndexedCorpus {
    pub fn new<I, S>(sentences: I, vocab: &Vocabulary) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        let mut tokens = 0;
        let sentences: Vec<Vec<u32>> = sentences
            .into_iter()
            .map(|s| {
                s.as_ref()
                    .iter()
                    .filter_map(|w| vocab.index_of(w).map(|i| i as u32))
                    .collect::<Vec<u32>>()
            })
            .filter(|s| !s.is_empty())
            .inspect(|s| tokens += s.len() as u64)
            .collect();
        IndexedCorpus { sentences, tokens }
    }

    pub fn sentences(&self) -> &[Vec<u32>] {
        &self.sentences
    }

    pub fn tokens(&self) -> u64 {
        self.tokens
    }
}

/// Snapshot passed to the progress callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub epoch: usize,
    pub processed_tokens: u64,
    pub total_tokens: u64,
    pub lr: f64,
    pub tokens_per_sec: f64,
    /// Mean loss per prediction so far in this epoch (whole epoch when
    /// `epoch_finished`).
    pub epoch_mean_loss: f64,
    pub epoch_finished: bool,
}

/// Parameters and statistics of a finished run.
#[derive(Debug, Clone)]
pub struct Trained<F: Real> {
    pub params: ParameterMatrices<F>,
    pub rows: WordRows,
    /// Mean loss per prediction, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

impl<F: Real> Trained<F> {
    /// Representation of every vocabulary word, as a store.
    pub fn to_store(&self, vocab: &Vocabulary) -> VectorStore {
        let dim = self.params.dim();
        let mut vectors = Vec::with_capacity(vocab.len() * dim);
        for w in 0..vocab.len() {
            let rep = word_representation(w, &self.params, &self.rows);
            vectors.extend(rep.iter().map(|v| v.to_f32().unwrap()));
        }
        VectorStore::new(vocab.clone(), dim, vectors).expect("shapes agree by construction")
    }
}

const REPORT_EVERY: u64 = 100_000;

/// Train and return `f32` word vectors together with per-epoch mean loss.
pub fn train(
    corpus: &[Sentence],
    vocab: &Vocabulary,
    config: &ModelConfig,
    progress: &(dyn Fn(&Progress) + Sync),
) -> Result<(VectorStore, Vec<f64>)> {
    let indexed = IndexedCorpus::new(corpus, vocab);
    let trained = train_indexed::<f32>(&indexed, vocab, config, progress)?;
    Ok((trained.to_store(vocab), trained.epoch_losses))
}

/// Training loop over an already indexed corpus.
pub fn train_indexed<F: Real>(
    corpus: &IndexedCorpus,
    vocab: &Vocabulary,
    config: &ModelConfig,
    progress: &(dyn Fn(&Progress) + Sync),
) -> Result<Trained<F>> {
    config.validate()?;
    if vocab.len() < 2 {
        return Err(Error::Config(
            "negative sampling needs a vocabulary of at least two words".into(),
        ));
    }
    if corpus.tokens() == 0 {
        return Err(Error::EmptyCorpus("no in-vocabulary tokens".into()));
    }
    let table_size = config.noise_table_size.max(vocab.len());
    let noise = build_noise_table(vocab, config.noise_power, table_size)?;
    let rows = WordRows::new(vocab, config);
    let params = init_parameters::<F>(config, vocab.len());
    let keep: Vec<f64> = (0..vocab.len())
        .map(|w| keep_probability(vocab.frequency(w).min(1.0), config.subsample_t))
        .collect::<Result<_>>()?;

    let ctx = StepContext {
        config,
        rows: &rows,
        noise: &noise,
    };
    let total = corpus.tokens() * config.epochs as u64;
    let processed = AtomicU64::new(0);
    let started = Instant::now();
    let workers = config.workers.max(1).min(corpus.sentences().len());
    let chunk = corpus.sentences().len().div_ceil(workers);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let shard_results: Vec<Result<(f64, u64)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = corpus
                .sentences()
                .chunks(chunk)
                .enumerate()
                .map(|(w, shard)| {
                    let worker = Worker {
                        id: w,
                        epoch,
                        params: &params,
                        ctx,
                        keep: &keep,
                        processed: &processed,
                        total,
                        started,
                        progress,
                    };
                    scope.spawn(move || worker.run(shard, (epoch * workers + w) as u64))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training worker panicked"))
                .collect()
        });
        let mut loss = 0.0;
        let mut predictions = 0;
        for r in shard_results {
            let (l, n) = r?;
            loss += l;
            predictions += n;
        }
        if predictions == 0 {
            return Err(Error::EmptyCorpus(
                "no training examples left after subsampling".into(),
            ));
        }
        let mean = loss / predictions as f64;
        epoch_losses.push(mean);
        let done = processed.load(Ordering::Relaxed);
        progress(&Progress {
            epoch,
            processed_tokens: done,
            total_tokens: total,
            lr: lr_schedule(config.initial_lr, done as f64 / total as f64),
            tokens_per_sec: done as f64 / started.elapsed().as_secs_f64().max(1e-9),
            epoch_mean_loss: mean,
            epoch_finished: true,
        });
    }

    Ok(Trained {
        params,
        rows,
        epoch_losses,
    })
}

struct Worker<'a, F: Real> {
    id: usize,
    epoch: usize,
    params: &'a ParameterMatrices<F>,
    ctx: StepContext<'a>,
    keep: &'a [f64],
    processed: &'a AtomicU64,
    total: u64,
    started: Instant,
    progress: &'a (dyn Fn(&Progress) + Sync),
}

impl<F: Real> Worker<'_, F> {
    /// Returns the summed loss and number of predictions.
    fn run(&self, shard: &[Vec<u32>], stream: u64) -> Result<(f64, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.ctx.config.seed);
        rng.set_stream(stream);
        let mut scratch = Scratch::<F>::new(self.ctx.config.dim);
        let mut kept = Vec::new();
        let mut loss = 0.0;
        let mut predictions = 0u64;
        let mut since_report = 0u64;
        for sentence in shard {
            let done = self.processed.load(Ordering::Relaxed);
            let lr = lr_schedule(self.ctx.config.initial_lr, done as f64 / self.total as f64);
            let lr_f = F::from_f64_lossy(lr);

            kept.clear();
            for &w in sentence {
                let p = self.keep[w as usize];
                if p >= 1.0 || rng.gen::<f64>() < p {
                    kept.push(w);
                }
            }
            for pos in 0..kept.len() {
                let step = train_position(&kept, pos, self.params, self.ctx, &mut rng, lr_f, &mut scratch)
                    .map_err(|NonFinite| Error::NumericInstability {
                        step: done + pos as u64,
                    })?;
                loss += step.loss.to_f64().unwrap();
                predictions += step.predictions as u64;
            }

            let n = sentence.len() as u64;
            let done = self.processed.fetch_add(n, Ordering::Relaxed) + n;
            since_report += n;
            if self.id == 0 && since_report >= REPORT_EVERY {
                since_report = 0;
                (self.progress)(&Progress {
                    epoch: self.epoch,
                    processed_tokens: done,
                    total_tokens: self.total,
                    lr,
                    tokens_per_sec: done as f64 / self.started.elapsed().as_secs_f64().max(1e-9),
                    epoch_mean_loss: if predictions > 0 {
                        loss / predictions as f64
                    } else {
                        0.0
                    },
                    epoch_finished: false,
                });
            }
        }
        Ok((loss, predictions))
    }
}

/// Progress callback that discards every report.
pub fn no_progress(_: &Progress) {}
