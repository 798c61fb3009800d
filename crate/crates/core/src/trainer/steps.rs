//! Single SGD updates for the negative-sampling objective.

use rand::Rng;

use crate::corpus::NoiseTable;

use super::config::{Mode, ModelConfig};
use super::params::{ParameterMatrices, Real};
use super::subword::WordRows;

/// Floor applied to the linearly decaying learning rate, as a fraction of
/// the initial rate.
pub const MIN_LR_FRACTION: f64 = 1e-4;

/// A dot product became NaN or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFinite;

/// Loss summed over the predictions made by one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLoss<F> {
    pub loss: F,
    pub predictions: usize,
}

impl<F: Real> StepLoss<F> {
    pub fn zero() -> Self {
        StepLoss {
            loss: F::zero(),
            predictions: 0,
        }
    }
}

/// Weighted set of input rows whose sum forms the hidden vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Projection<F> {
    pub rows: Vec<(usize, F)>,
}

impl<F: Real> Projection<F> {
    pub fn clear(&mut self) {
        self.rows.clear();
    }

    /// Add the rows of `word` scaled so that they contribute `weight` in total.
    pub fn push_word(&mut self, rows: &WordRows, word: usize, weight: F) {
        let parts = rows.rows(word);
        let w = weight / F::from_usize(parts.len()).unwrap();
        self.rows.extend(parts.iter().map(|&r| (r as usize, w)));
    }

    pub fn hidden_into(&self, params: &ParameterMatrices<F>, out: &mut [F]) {
        out.iter_mut().for_each(|v| *v = F::zero());
        for &(r, w) in &self.rows {
            for (o, &x) in out.iter_mut().zip(params.input.row(r)) {
                *o = *o + w * x;
            }
        }
    }
}

/// Reusable buffers for one worker.
#[derive(Debug, Clone)]
pub struct Scratch<F> {
    pub hidden: Vec<F>,
    pub grad: Vec<F>,
    pub projection: Projection<F>,
    pub negatives: Vec<usize>,
}

impl<F: Real> Scratch<F> {
    pub fn new(dim: usize) -> Self {
        Scratch {
            hidden: vec![F::zero(); dim],
            grad: vec![F::zero(); dim],
            projection: Projection::default(),
            negatives: Vec::new(),
        }
    }
}

/// Read-only state shared by all steps of a training run.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub config: &'a ModelConfig,
    pub rows: &'a WordRows,
    pub noise: &'a NoiseTable,
}

/// Numerically stable `ln(1 + e^x)`.
fn softplus<F: Real>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// One negative-sampling update.
///
/// The hidden vector `u` is the weighted sum of `projection`'s rows. The
/// loss `-ln σ(u·v_target) - Σ ln σ(-u·v_noise)` is computed from the
/// current parameters, after which the touched output rows and every
/// projection row take one gradient step of size `lr`. Returns the loss
/// before the update.
pub fn negative_sampling_step<F: Real>(
    params: &ParameterMatrices<F>,
    projection: &Projection<F>,
    target: usize,
    noise: &[usize],
    lr: F,
    hidden: &mut [F],
    grad: &mut [F],
) -> Result<F, NonFinite> {
    projection.hidden_into(params, hidden);
    grad.iter_mut().for_each(|g| *g = F::zero());
    let mut loss = F::zero();
    let labelled = std::iter::once((target, true)).chain(noise.iter().map(|&n| (n, false)));
    for (word, positive) in labelled {
        let out = params.output.row_mut(word);
        let x = dot(hidden, out);
        if !x.is_finite() {
            return Err(NonFinite);
        }
        let g = if positive {
            loss = loss + softplus(-x);
            sigmoid(x) - F::one()
        } else {
            loss = loss + softplus(x);
            sigmoid(x)
        };
        for ((gr, o), &h) in grad.iter_mut().zip(out.iter_mut()).zip(hidden.iter()) {
            *gr = *gr + g * *o;
            *o = *o - lr * g * h;
        }
    }
    for &(r, w) in &projection.rows {
        let step = lr * w;
        for (p, &g) in params.input.row_mut(r).iter_mut().zip(grad.iter()) {
            *p = *p - step * g;
        }
    }
    Ok(loss)
}

/// Linearly decaying learning rate with a floor.
pub fn lr_schedule(initial_lr: f64, progress: f64) -> f64 {
    initial_lr * (1.0 - progress).max(MIN_LR_FRACTION)
}

/// Effective window for one position, uniform in `1..=window`.
pub fn sample_window<R: Rng + ?Sized>(rng: &mut R, window: usize) -> usize {
    rng.gen_range(1..=window)
}

/// Draw `k` noise words, redrawing any that equal `target`.
pub fn sample_negatives<R: Rng + ?Sized>(
    rng: &mut R,
    noise: &NoiseTable,
    target: usize,
    k: usize,
    out: &mut Vec<usize>,
) {
    const MAX_REDRAWS: usize = 1000;
    out.clear();
    let vocab_size = noise.vocab_size();
    for _ in 0..k {
        let mut draw = noise.sample(rng);
        let mut redraws = 0;
        while draw == target {
            redraws += 1;
            if redraws > MAX_REDRAWS {
                // The table holds almost nothing but the target; pick any
                // other word uniformly.
                assert!(vocab_size >= 2, "negative sampling needs two distinct words");
                draw = rng.gen_range(0..vocab_size - 1);
                if draw >= target {
                    draw += 1;
                }
                break;
            }
            draw = noise.sample(rng);
        }
        out.push(draw);
    }
}

/// Positions within `radius` of `position`, excluding it, clipped to the
/// sentence.
pub fn context_positions(len: usize, position: usize, radius: usize) -> impl Iterator<Item = usize> {
    let start = position.saturating_sub(radius);
    let end = (position + radius + 1).min(len);
    (start..end).filter(move |&p| p != position)
}

/// Representation of a vocabulary word: its input row averaged with its
/// n-gram bucket rows (just the input row when subwords are off).
pub fn word_representation<F: Real>(word: usize, params: &ParameterMatrices<F>, rows: &WordRows) -> Vec<F> {
    let parts = rows.rows(word);
    let mut out = vec![F::zero(); params.dim()];
    for &r in parts {
        for (o, &x) in out.iter_mut().zip(params.input.row(r as usize)) {
            *o = *o + x;
        }
    }
    let n = F::from_usize(parts.len()).unwrap();
    out.iter_mut().for_each(|v| *v = *v / n);
    out
}

/// CBOW update for the word at `position` with an explicit window radius.
pub fn cbow_update<F: Real, R: Rng + ?Sized>(
    sentence: &[u32],
    position: usize,
    radius: usize,
    params: &ParameterMatrices<F>,
    ctx: StepContext<'_>,
    rng: &mut R,
    lr: F,
    scratch: &mut Scratch<F>,
) -> Result<StepLoss<F>, NonFinite> {
    let contexts: Vec<usize> = context_positions(sentence.len(), position, radius).collect();
    if contexts.is_empty() {
        return Ok(StepLoss::zero());
    }
    let weight = F::one() / F::from_usize(contexts.len()).unwrap();
    scratch.projection.clear();
    for &c in &contexts {
        scratch.projection.push_word(ctx.rows, sentence[c] as usize, weight);
    }
    let target = sentence[position] as usize;
    sample_negatives(rng, ctx.noise, target, ctx.config.negatives, &mut scratch.negatives);
    let loss = negative_sampling_step(
        params,
        &scratch.projection,
        target,
        &scratch.negatives,
        lr,
        &mut scratch.hidden,
        &mut scratch.grad,
    )?;
    Ok(StepLoss {
        loss,
        predictions: 1,
    })
}

/// Predict the word at `position` from the mean of its context.
pub fn cbow_step<F: Real, R: Rng + ?Sized>(
    sentence: &[u32],
    position: usize,
    params: &ParameterMatrices<F>,
    ctx: StepContext<'_>,
    rng: &mut R,
    lr: F,
    scratch: &mut Scratch<F>,
) -> Result<StepLoss<F>, NonFinite> {
    let radius = sample_window(rng, ctx.config.window);
    cbow_update(sentence, position, radius, params, ctx, rng, lr, scratch)
}

/// Skip-gram update for the word at `position` with an explicit window radius.
pub fn skipgram_update<F: Real, R: Rng + ?Sized>(
    sentence: &[u32],
    position: usize,
    radius: usize,
    params: &ParameterMatrices<F>,
    ctx: StepContext<'_>,
    rng: &mut R,
    lr: F,
    scratch: &mut Scratch<F>,
) -> Result<StepLoss<F>, NonFinite> {
    let center = sentence[position] as usize;
    scratch.projection.clear();
    scratch.projection.push_word(ctx.rows, center, F::one());
    let mut total = StepLoss::zero();
    for c in context_positions(sentence.len(), position, radius) {
        let target = sentence[c] as usize;
        sample_negatives(rng, ctx.noise, target, ctx.config.negatives, &mut scratch.negatives);
        total.loss = total.loss
            + negative_sampling_step(
                params,
                &scratch.projection,
                target,
                &scratch.negatives,
                lr,
                &mut scratch.hidden,
                &mut scratch.grad,
            )?;
        total.predictions += 1;
    }
    Ok(total)
}

/// Predict every context word within a sampled window from the word at
/// `position`.
pub fn skipgram_step<F: Real, R: Rng + ?Sized>(
    sentence: &[u32],
    position: usize,
    params: &ParameterMatrices<F>,
    ctx: StepContext<'_>,
    rng: &mut R,
    lr: F,
    scratch: &mut Scratch<F>,
) -> Result<StepLoss<F>, NonFinite> {
    let radius = sample_window(rng, ctx.config.window);
    skipgram_update(sentence, position, radius, params, ctx, rng, lr, scratch)
}

/// Dispatch on the configured mode.
pub fn train_position<F: Real, R: Rng + ?Sized>(
    sentence: &[u32],
    position: usize,
    params: &ParameterMatrices<F>,
    ctx: StepContext<'_>,
    rng: &mut R,
    lr: F,
    scratch: &mut Scratch<F>,
) -> Result<StepLoss<F>, NonFinite> {
    match ctx.config.mode {
        Mode::Cbow => cbow_step(sentence, position, params, ctx, rng, lr, scratch),
        Mode::SkipGram => skipgram_step(sentence, position, params, ctx, rng, lr, scratch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_noise_table, build_vocabulary};
    use crate::trainer::params::HogwildMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(input: Vec<f64>, output: Vec<f64>, v: usize, dim: usize) -> ParameterMatrices<f64> {
        let rows = input.len() / dim;
        ParameterMatrices::new(
            HogwildMatrix::from_vec(rows, dim, input),
            HogwildMatrix::from_vec(v, dim, output),
            v,
        )
    }

    fn single_row_projection(r: usize) -> Projection<f64> {
        Projection {
            rows: vec![(r, 1.0)],
        }
    }

    #[test]
    fn zero_dots_give_two_ln2() {
        let p = params(vec![0.0; 4], vec![0.0; 4], 2, 2);
        let mut h = vec![0.0; 2];
        let mut g = vec![0.0; 2];
        let loss = negative_sampling_step(&p, &single_row_projection(0), 0, &[1], 0.1, &mut h, &mut g).unwrap();
        approx::assert_abs_diff_eq!(loss, 2.0 * std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn saturated_loss_goes_to_zero() {
        // u·v_target = 1000, u·v_noise = -1000
        let p = params(vec![1.0, 0.0, 0.0, 0.0], vec![1000.0, 0.0, -1000.0, 0.0], 2, 2);
        let mut h = vec![0.0; 2];
        let mut g = vec![0.0; 2];
        let loss = negative_sampling_step(&p, &single_row_projection(0), 0, &[1], 0.1, &mut h, &mut g).unwrap();
        assert!((0.0..1e-300).contains(&loss));
    }

    #[test]
    fn non_finite_dot_is_reported() {
        let p = params(vec![f64::INFINITY, 0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0, 0.0], 2, 2);
        let mut h = vec![0.0; 2];
        let mut g = vec![0.0; 2];
        let r = negative_sampling_step(&p, &single_row_projection(0), 0, &[1], 0.1, &mut h, &mut g);
        assert_eq!(r, Err(NonFinite));
    }

    #[test]
    fn lr_schedule_examples() {
        assert_eq!(lr_schedule(0.025, 0.0), 0.025);
        approx::assert_abs_diff_eq!(lr_schedule(0.025, 1.0), 0.025 * 1e-4, epsilon = 1e-18);
        approx::assert_abs_diff_eq!(lr_schedule(0.05, 0.5), 0.025, epsilon = 1e-15);
    }

    #[test]
    fn context_truncates_at_edges() {
        assert_eq!(context_positions(5, 0, 2).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(context_positions(5, 4, 2).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(context_positions(1, 0, 5).count(), 0);
    }

    struct Fixture {
        config: ModelConfig,
        rows: WordRows,
        noise: NoiseTable,
    }

    impl Fixture {
        fn new(mode: Mode) -> Self {
            let sentences: Vec<Vec<String>> = vec!["a b c a b a".split(' ').map(String::from).collect()];
            let vocab = build_vocabulary(&sentences, 1).unwrap();
            let config = ModelConfig {
                mode,
                dim: 3,
                window: 1,
                negatives: 2,
                ..ModelConfig::default()
            };
            Fixture {
                rows: WordRows::new(&vocab, &config),
                noise: build_noise_table(&vocab, 0.75, 1000).unwrap(),
                config,
            }
        }

        fn ctx(&self) -> StepContext<'_> {
            StepContext {
                config: &self.config,
                rows: &self.rows,
                noise: &self.noise,
            }
        }
    }

    #[test]
    fn single_word_sentence_is_skipped() {
        for mode in [Mode::Cbow, Mode::SkipGram] {
            let fx = Fixture::new(mode);
            let p: ParameterMatrices<f64> = crate::trainer::params::init_parameters(&fx.config, 3);
            let before = p.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut scratch = Scratch::new(3);
            let loss = train_position(&[0], 0, &p, fx.ctx(), &mut rng, 0.1, &mut scratch).unwrap();
            assert_eq!(loss, StepLoss::zero());
            assert_eq!(p, before);
        }
    }

    #[test]
    fn skipgram_middle_radius_one_makes_two_predictions() {
        let fx = Fixture::new(Mode::SkipGram);
        let p: ParameterMatrices<f64> = crate::trainer::params::init_parameters(&fx.config, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut scratch = Scratch::new(3);
        let out = skipgram_update(&[0, 1, 2], 1, 1, &p, fx.ctx(), &mut rng, 0.1, &mut scratch).unwrap();
        assert_eq!(out.predictions, 2);
    }

    #[test]
    fn negatives_never_equal_target() {
        let fx = Fixture::new(Mode::SkipGram);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut out = Vec::new();
        for target in 0..3 {
            for _ in 0..200 {
                sample_negatives(&mut rng, &fx.noise, target, 5, &mut out);
                assert_eq!(out.len(), 5);
                assert!(out.iter().all(|&n| n != target));
            }
        }
    }

    #[test]
    fn cbow_hand_computed_loss() {
        // Vocabulary {x, y}; context row x = (1, 0), output y = (0.5, 0),
        // output x = (-1, 0). Sentence [x, y], predict y from x with noise x.
        // u = (1, 0); u·v_y = 0.5, u·v_x = -1.
        // loss = ln(1 + e^-0.5) + ln(1 + e^-1)
        let p = params(vec![1.0, 0.0, 0.0, 0.0], vec![-1.0, 0.0, 0.5, 0.0], 2, 2);
        let expected = (1.0 + (-0.5f64).exp()).ln() + (1.0 + (-1.0f64).exp()).ln();
        let mut projection = Projection::default();
        projection.rows.push((0, 1.0));
        let mut h = vec![0.0; 2];
        let mut g = vec![0.0; 2];
        let loss = negative_sampling_step(&p, &projection, 1, &[0], 0.0, &mut h, &mut g).unwrap();
        approx::assert_abs_diff_eq!(loss, expected, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(loss, 0.787_338_67, epsilon = 1e-8);
    }
}
