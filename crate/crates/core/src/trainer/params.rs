use std::cell::UnsafeCell;
use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;

/// Floating point type used for parameters. Training runs in `f32`; the
/// gradient checks instantiate the same code with `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Row-major matrix that permits unsynchronized concurrent updates.
///
/// Workers update rows through a shared reference without locking; racing
/// writes to the same row may lose updates, which lock-free SGD tolerates.
/// With a single worker every access is sequential.
pub struct HogwildMatrix<F> {
    data: Box<[UnsafeCell<F>]>,
    rows: usize,
    cols: usize,
}

// Concurrent access is unsynchronized on purpose, see the type docs.
unsafe impl<F: Send> Sync for HogwildMatrix<F> {}

impl<F: Real> HogwildMatrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec(rows, cols, vec![F::zero(); rows * cols])
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        let data = data.into_iter().map(UnsafeCell::new).collect();
        HogwildMatrix { data, rows, cols }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        assert!(i < self.rows, "row {i} out of bounds ({} rows)", self.rows);
        // UnsafeCell<F> has the same layout as F.
        unsafe {
            std::slice::from_raw_parts(self.data[i * self.cols].get() as *const F, self.cols)
        }
    }

    /// Mutable view of a row through a shared reference.
    ///
    /// Callers must not hold another reference to the same row while the
    /// returned slice is alive within one thread.
    #[allow(clippy::mut_from_ref)]
    pub fn row_mut(&self, i: usize) -> &mut [F] {
        assert!(i < self.rows, "row {i} out of bounds ({} rows)", self.rows);
        unsafe { std::slice::from_raw_parts_mut(self.data[i * self.cols].get(), self.cols) }
    }

    pub fn to_vec(&self) -> Vec<F> {
        (0..self.rows).flat_map(|r| self.row(r).to_vec()).collect()
    }

    pub fn all_finite(&self) -> bool {
        (0..self.rows).all(|r| self.row(r).iter().all(|v| v.is_finite()))
    }
}

impl<F: Real> Clone for HogwildMatrix<F> {
    fn clone(&self) -> Self {
        Self::from_vec(self.rows, self.cols, self.to_vec())
    }
}

impl<F: Real> Debug for HogwildMatrix<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HogwildMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl<F: Real> PartialEq for HogwildMatrix<F> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.to_vec() == other.to_vec()
    }
}

/// Input (word + n-gram bucket) and output vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterMatrices<F: Real> {
    pub input: HogwildMatrix<F>,
    pub output: HogwildMatrix<F>,
    vocab_size: usize,
}

impl<F: Real> ParameterMatrices<F> {
    pub fn new(input: HogwildMatrix<F>, output: HogwildMatrix<F>, vocab_size: usize) -> Self {
        assert_eq!(input.cols(), output.cols(), "input/output dimensions differ");
        assert_eq!(output.rows(), vocab_size, "one output row per word");
        assert!(input.rows() >= vocab_size, "input rows must cover the vocabulary");
        ParameterMatrices {
            input,
            output,
            vocab_size,
        }
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn bucket_count(&self) -> usize {
        self.input.rows() - self.vocab_size
    }

    pub fn all_finite(&self) -> bool {
        self.input.all_finite() && self.output.all_finite()
    }
}

/// Input rows uniform in `[-0.5/dim, 0.5/dim]`, output rows zero. Fully
/// determined by `config.seed`.
pub fn init_parameters<F: Real>(config: &ModelConfig, vocab_size: usize) -> ParameterMatrices<F> {
    assert!(vocab_size >= 1, "vocabulary must not be empty");
    let dim = config.dim;
    let rows = vocab_size + config.bucket_rows();
    let bound = 0.5 / dim as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);
    let uniform = Uniform::new_inclusive(-bound, bound);
    let input: Vec<F> = (0..rows * dim)
        .map(|_| F::from_f64_lossy(uniform.sample(&mut rng)))
        .collect();
    ParameterMatrices::new(
        HogwildMatrix::from_vec(rows, dim, input),
        HogwildMatrix::zeros(vocab_size, dim),
        vocab_size,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dim: usize, seed: u64) -> ModelConfig {
        ModelConfig {
            dim,
            seed,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn init_bounds() {
        let p: ParameterMatrices<f32> = init_parameters(&config(100, 3), 20);
        for r in 0..20 {
            assert!(p.input.row(r).iter().all(|v| v.abs() <= 0.005));
        }
        assert!(p.input.row(0).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn init_deterministic() {
        let a: ParameterMatrices<f64> = init_parameters(&config(8, 42), 10);
        let b: ParameterMatrices<f64> = init_parameters(&config(8, 42), 10);
        let c: ParameterMatrices<f64> = init_parameters(&config(8, 43), 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn output_starts_at_zero() {
        let p: ParameterMatrices<f32> = init_parameters(&config(16, 1), 7);
        for r in 0..7 {
            let norm: f32 = p.output.row(r).iter().map(|v| v * v).sum();
            assert_eq!(norm, 0.0);
        }
    }

    #[test]
    fn subword_adds_bucket_rows() {
        let cfg = ModelConfig {
            subword: true,
            buckets: 50,
            ..config(4, 1)
        };
        let p: ParameterMatrices<f32> = init_parameters(&cfg, 7);
        assert_eq!(p.input.rows(), 57);
        assert_eq!(p.output.rows(), 7);
        assert_eq!(p.bucket_count(), 50);
    }
}
