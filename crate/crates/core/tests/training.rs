use std::io::{BufRead, BufReader};

use embedkit::corpus::{build_vocabulary, filter_sentences, tokenize_line, Sentence, MIN_SENTENCE_TOKENS};
use embedkit::store::cosine;
use embedkit::trainer::{no_progress, train, Mode, ModelConfig, ModelKind};
use embedkit::Error;
use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_config(kind: ModelKind) -> ModelConfig {
    ModelConfig {
        dim: 16,
        min_count: 1,
        buckets: 1000,
        workers: 1,
        subsample_t: 1.0,
        ..ModelConfig::for_model(kind)
    }
}

fn words(s: &str) -> Sentence {
    s.split_whitespace().map(str::to_owned).collect()
}

#[test]
fn single_sentence_is_reproducible() {
    let corpus = vec![words("the quick brown fox jumps over the lazy dog")];
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    for kind in [ModelKind::Cbow, ModelKind::SkipGram, ModelKind::FastTextSkip, ModelKind::FastTextCbow] {
        let config = small_config(kind);
        let (a, la) = train(&corpus, &vocab, &config, &no_progress).unwrap();
        let (b, lb) = train(&corpus, &vocab, &config, &no_progress).unwrap();
        assert_eq!(a.vectors(), b.vectors(), "{kind:?}");
        assert_eq!(la, lb);
        assert_eq!(la.len(), config.epochs);
        assert!(a.vectors().iter().all(|x| x.is_finite()));
    }
}

#[test]
fn different_seeds_differ() {
    let corpus = vec![words("a b c d e f g h")];
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let mut config = small_config(ModelKind::SkipGram);
    let (a, _) = train(&corpus, &vocab, &config, &no_progress).unwrap();
    config.seed += 1;
    let (b, _) = train(&corpus, &vocab, &config, &no_progress).unwrap();
    assert_ne!(a.vectors(), b.vectors());
}

fn mean_cosine(store: &embedkit::VectorStore, xs: &[String], ys: &[String]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for x in xs {
        for y in ys {
            if x != y {
                sum += cosine(store.embedding(x).unwrap(), store.embedding(y).unwrap()).unwrap();
                n += 1;
            }
        }
    }
    sum / n as f64
}

#[test]
fn separates_two_clusters() {
    let a: Vec<String> = (0..10).map(|i| format!("alpha{i}")).collect();
    let b: Vec<String> = (0..10).map(|i| format!("beta{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let corpus: Vec<Sentence> = (0..2000)
        .map(|i| {
            let pool = if i % 2 == 0 { &a } else { &b };
            (0..8).map(|_| pool.choose(&mut rng).unwrap().clone()).collect()
        })
        .collect();
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    for kind in [ModelKind::Cbow, ModelKind::SkipGram, ModelKind::FastTextSkip, ModelKind::FastTextCbow] {
        let config = small_config(kind);
        let (store, _) = train(&corpus, &vocab, &config, &no_progress).unwrap();
        let intra = (mean_cosine(&store, &a, &a) + mean_cosine(&store, &b, &b)) / 2.0;
        let inter = mean_cosine(&store, &a, &b);
        assert!(intra > inter + 0.2, "{kind:?}: intra {intra:.3} inter {inter:.3}");
    }
}

fn desk_slice(bytes: usize) -> Vec<Sentence> {
    let file = std::fs::File::open(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/desk-corpus.txt.gz")).unwrap();
    let mut read = 0;
    let mut out = Vec::new();
    for line in BufReader::new(GzDecoder::new(file)).lines() {
        let line = line.unwrap();
        read += line.len() + 1;
        if read > bytes {
            break;
        }
        out.push(tokenize_line(&line));
    }
    filter_sentences(out, MIN_SENTENCE_TOKENS).collect()
}

// Skip-gram's online loss on this slice flattens out in the last epoch and
// can tick up by about 2e-3, so only CBOW is held to the monotone bound here.
#[test]
fn cbow_loss_decreases_on_one_megabyte() {
    let corpus = desk_slice(1_000_000);
    let config = ModelConfig {
        workers: 1,
        ..ModelConfig::for_mode(Mode::Cbow)
    };
    let vocab = build_vocabulary(&corpus, config.min_count).unwrap();
    let (store, losses) = train(&corpus, &vocab, &config, &no_progress).unwrap();
    assert_eq!(losses.len(), 5);
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-3, "{losses:?}");
    }
    assert!(store.vectors().iter().all(|x| x.is_finite()));
}

#[test]
fn skipgram_losses_are_finite_and_fall_overall() {
    let corpus = desk_slice(300_000);
    let config = ModelConfig {
        dim: 50,
        workers: 1,
        ..ModelConfig::for_mode(Mode::SkipGram)
    };
    let vocab = build_vocabulary(&corpus, config.min_count).unwrap();
    let (_, losses) = train(&corpus, &vocab, &config, &no_progress).unwrap();
    assert!(losses.iter().all(|l| l.is_finite() && *l > 0.0));
    assert!(losses[4] < losses[0], "{losses:?}");
}

#[test]
fn parallel_training_stays_finite() {
    let corpus = desk_slice(200_000);
    let config = ModelConfig {
        dim: 32,
        workers: 4,
        buckets: 10_000,
        ..ModelConfig::for_model(ModelKind::FastTextSkip)
    };
    let vocab = build_vocabulary(&corpus, config.min_count).unwrap();
    let (store, losses) = train(&corpus, &vocab, &config, &no_progress).unwrap();
    assert!(store.vectors().iter().all(|x| x.is_finite()));
    assert!(losses.iter().all(|l| l.is_finite()));
}

#[test]
fn single_word_vocabulary_is_rejected() {
    let corpus = vec![words("echo echo echo echo echo")];
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let err = train(&corpus, &vocab, &small_config(ModelKind::SkipGram), &no_progress).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn corpus_without_known_words_is_empty() {
    let vocab = build_vocabulary(&[words("a b c")], 1).unwrap();
    let corpus = vec![words("x y z")];
    let err = train(&corpus, &vocab, &small_config(ModelKind::Cbow), &no_progress).unwrap_err();
    assert!(matches!(err, Error::EmptyCorpus(_)), "{err}");
}

#[test]
fn divergent_learning_rate_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let corpus: Vec<Sentence> =
        (0..200).map(|_| (0..10).map(|_| format!("w{}", rng.gen_range(0..20))).collect()).collect();
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let config = ModelConfig {
        initial_lr: 1e30,
        ..small_config(ModelKind::SkipGram)
    };
    let err = train(&corpus, &vocab, &config, &no_progress).unwrap_err();
    assert!(matches!(err, Error::NumericInstability { .. }), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn aggressive_subsampling_of_a_tiny_corpus_is_empty() {
    let corpus = vec![words("the quick brown fox jumps over the lazy dog")];
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let config = ModelConfig {
        subsample_t: 1e-9,
        ..small_config(ModelKind::Cbow)
    };
    assert!(matches!(train(&corpus, &vocab, &config, &no_progress), Err(Error::EmptyCorpus(_))));
}

#[test]
fn invalid_config_is_rejected_before_training() {
    let corpus = vec![words("a b c d e")];
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let config = ModelConfig {
        dim: 0,
        ..small_config(ModelKind::Cbow)
    };
    assert!(matches!(train(&corpus, &vocab, &config, &no_progress), Err(Error::Config(_))));
}
