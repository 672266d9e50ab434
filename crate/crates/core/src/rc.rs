//! Echo state network: a frozen random reservoir with a trainable sigmoid
//! readout, plus a memoryless mean-pool encoder for the perceptron baseline.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::CodebookChoice;
use crate::error::{Error, Result};
use crate::features::{IndicatorVector, LabeledSample};
use crate::scalar::Real;

pub const DEFAULT_RESERVOIR_SIZE: usize = 64;
pub const DEFAULT_SPECTRAL_RADIUS: f64 = 0.9;
pub const DEFAULT_LEAK: f64 = 1.0;
pub const INPUT_SCALE: f64 = 0.5;
const P_CLAMP: f64 = 1e-12;
const RESAMPLE_LIMIT: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            batch: 32,
            epochs: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || self.batch == 0 {
            return Err(Error::InvalidConfig(format!(
                "lr {} must be >= 0 and batch {} positive",
                self.lr, self.batch
            )));
        }
        Ok(())
    }
}

/// Maps an input sequence to the feature vector seen by the readout.
pub trait SequenceEncoder<T: Real>: Send + Sync {
    fn output_dim(&self) -> usize;
    fn encode(&self, sequence: &[IndicatorVector<T>]) -> DVector<T>;
    /// Identity of the frozen part; equal fingerprints may be averaged.
    fn fingerprint(&self) -> u64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir<T: Real> {
    pub input_dim: usize,
    pub size: usize,
    pub rho: f64,
    pub leak: f64,
    pub seed: u64,
    pub w_in: DMatrix<T>,
    pub w_res: DMatrix<T>,
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Dense uniform reservoir rescaled to spectral radius `rho`; input weights
/// uniform in `[-0.5, 0.5]`. A degenerate draw is retried with `seed + 1`.
pub fn init_reservoir<T: Real>(
    input_dim: usize,
    size: usize,
    rho: f64,
    seed: u64,
) -> Result<Reservoir<T>> {
    if size == 0 || input_dim == 0 {
        return Err(Error::InvalidConfig("reservoir and input sizes must be positive".into()));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidConfig(format!("spectral radius {rho} outside (0, 1)")));
    }
    for attempt in 0..RESAMPLE_LIMIT {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let w_in = DMatrix::<f64>::from_fn(size, input_dim, |_, _| {
            rng.random_range(-INPUT_SCALE..=INPUT_SCALE)
        });
        let raw = DMatrix::<f64>::from_fn(size, size, |_, _| rng.random_range(-1.0..=1.0));
        let radius = spectral_radius(&raw);
        if radius < 1e-12 {
            continue;
        }
        let w_res = raw * (rho / radius);
        return Ok(Reservoir {
            input_dim,
            size,
            rho,
            leak: DEFAULT_LEAK,
            seed,
            w_in: w_in.map(T::lit),
            w_res: w_res.map(T::lit),
        });
    }
    Err(Error::DegenerateSpectrum)
}

impl<T: Real> Reservoir<T> {
    pub fn with_leak(mut self, leak: f64) -> Result<Self> {
        if !(leak > 0.0 && leak <= 1.0) {
            return Err(Error::InvalidConfig(format!("leak {leak} outside (0, 1]")));
        }
        self.leak = leak;
        Ok(self)
    }

    pub fn zero_state(&self) -> DVector<T> {
        DVector::zeros(self.size)
    }

    /// `(1-α)·s + α·tanh(W_in x + W_res s)`.
    pub fn advance(&self, state: &DVector<T>, x: &[T]) -> DVector<T> {
        let x = DVector::from_column_slice(x);
        let pre = &self.w_in * x + &self.w_res * state;
        let a = T::lit(self.leak);
        let keep = T::one() - a;
        DVector::from_fn(self.size, |i, _| keep * state[i] + a * pre[i].tanh())
    }

    /// State after the whole sequence, starting from zero.
    pub fn final_state(&self, sequence: &[IndicatorVector<T>]) -> DVector<T> {
        sequence
            .iter()
            .fold(self.zero_state(), |s, x| self.advance(&s, &x.values))
    }
}

impl<T: Real> SequenceEncoder<T> for Reservoir<T> {
    fn output_dim(&self) -> usize {
        self.size
    }

    fn encode(&self, sequence: &[IndicatorVector<T>]) -> DVector<T> {
        self.final_state(sequence)
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        ("reservoir", self.input_dim, self.size, self.seed).hash(&mut h);
        self.rho.to_bits().hash(&mut h);
        self.leak.to_bits().hash(&mut h);
        for v in self.w_in.iter().chain(self.w_res.iter()) {
            v.as_f64().to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// Time-averaged input: the memoryless single-layer perceptron baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeanPool {
    pub input_dim: usize,
}

impl<T: Real> SequenceEncoder<T> for MeanPool {
    fn output_dim(&self) -> usize {
        self.input_dim
    }

    fn encode(&self, sequence: &[IndicatorVector<T>]) -> DVector<T> {
        let mut out = DVector::zeros(self.input_dim);
        for x in sequence {
            for (o, v) in out.iter_mut().zip(&x.values) {
                *o += *v;
            }
        }
        out / T::from_usize_lossy(sequence.len().max(1))
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        ("mean_pool", self.input_dim).hash(&mut h);
        h.finish()
    }
}

/// Frozen encoder plus trainable `w_out` over `[z; 1]`.
#[derive(Debug)]
pub struct ReadoutModel<T: Real, E> {
    pub encoder: Arc<E>,
    pub w_out: DVector<T>,
}

impl<T: Real, E> Clone for ReadoutModel<T, E> {
    fn clone(&self) -> Self {
        ReadoutModel {
            encoder: Arc::clone(&self.encoder),
            w_out: self.w_out.clone(),
        }
    }
}

pub type EsnModel<T> = ReadoutModel<T, Reservoir<T>>;
pub type PerceptronModel<T> = ReadoutModel<T, MeanPool>;

/// Encoded inputs and targets; the encoder is frozen, so encoding once per
/// dataset is exact.
#[derive(Debug, Clone)]
pub struct EncodedSet<T: Real> {
    pub z: Vec<DVector<T>>,
    pub y: Vec<T>,
}

impl<T: Real> EncodedSet<T> {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Binary cross-entropy with `p` clamped to `[1e-12, 1 - 1e-12]`.
pub fn loss<T: Real>(p: T, label: T) -> T {
    let p = p.max(T::lit(P_CLAMP)).min(T::one() - T::lit(P_CLAMP));
    -(label * p.ln() + (T::one() - label) * (T::one() - p).ln())
}

/// `w <- w - lr·grad`.
pub fn sgd_update<T: Real>(w: &mut DVector<T>, grad: &DVector<T>, lr: T) {
    w.iter_mut().zip(grad.iter()).for_each(|(w, g)| *w -= lr * *g);
}

fn label_value<T: Real>(label: CodebookChoice) -> T {
    T::lit(label.label() as f64)
}

impl<T: Real, E: SequenceEncoder<T>> ReadoutModel<T, E> {
    pub fn new(encoder: E) -> Self {
        Self::with_shared(Arc::new(encoder))
    }

    pub fn with_shared(encoder: Arc<E>) -> Self {
        let dim = encoder.output_dim() + 1;
        ReadoutModel {
            encoder,
            w_out: DVector::zeros(dim),
        }
    }

    pub fn encode_dataset(&self, data: &[LabeledSample<T>]) -> EncodedSet<T> {
        EncodedSet {
            z: data.iter().map(|s| self.encoder.encode(&s.sequence)).collect(),
            y: data.iter().map(|s| label_value(s.label)).collect(),
        }
    }

    /// `sigmoid(w_out · [z; 1])`.
    pub fn probability(&self, z: &DVector<T>) -> T {
        let n = z.len();
        let logit = self.w_out.rows(0, n).dot(z) + self.w_out[n];
        sigmoid(logit)
    }

    pub fn forward(&self, sequence: &[IndicatorVector<T>]) -> T {
        self.probability(&self.encoder.encode(sequence))
    }

    /// Mean of `(p - y)·[z; 1]` over `idx`.
    pub fn gradient(&self, set: &EncodedSet<T>, idx: &[usize]) -> DVector<T> {
        let mut g = DVector::zeros(self.w_out.len());
        let n = g.len() - 1;
        for &i in idx {
            let e = self.probability(&set.z[i]) - set.y[i];
            for k in 0..n {
                g[k] += e * set.z[i][k];
            }
            g[n] += e;
        }
        g / T::from_usize_lossy(idx.len().max(1))
    }

    pub fn mean_loss(&self, set: &EncodedSet<T>) -> T {
        if set.is_empty() {
            return T::zero();
        }
        let total = set
            .z
            .iter()
            .zip(&set.y)
            .fold(T::zero(), |acc, (z, y)| acc + loss(self.probability(z), *y));
        total / T::from_usize_lossy(set.len())
    }

    pub fn accuracy(&self, set: &EncodedSet<T>) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let half = T::lit(0.5);
        let hits = set
            .z
            .iter()
            .zip(&set.y)
            .filter(|(z, y)| (self.probability(z) > half) == (**y > half))
            .count();
        hits as f64 / set.len() as f64
    }

    fn apply_step(&mut self, set: &EncodedSet<T>, idx: &[usize], lr: T) {
        let g = self.gradient(set, idx);
        sgd_update(&mut self.w_out, &g, lr);
    }

    /// One gradient step on the mean batch loss.
    pub fn train_step(&mut self, batch: &[LabeledSample<T>], cfg: &TrainConfig) {
        if batch.is_empty() {
            return;
        }
        let set = self.encode_dataset(batch);
        let idx: Vec<usize> = (0..set.len()).collect();
        self.apply_step(&set, &idx, T::lit(cfg.lr));
    }

    /// `epochs` passes of seeded shuffled minibatches; returns the full-set
    /// loss after every epoch.
    pub fn train_local(&mut self, data: &[LabeledSample<T>], cfg: &TrainConfig, seed: u64) -> Vec<T> {
        let set = self.encode_dataset(data);
        self.train_encoded(&set, cfg, seed)
    }

    pub fn train_encoded(&mut self, set: &EncodedSet<T>, cfg: &TrainConfig, seed: u64) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..set.len()).collect();
        let lr = T::lit(cfg.lr);
        let mut trace = Vec::with_capacity(cfg.epochs);
        if set.is_empty() {
            return trace;
        }
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch.max(1)) {
                self.apply_step(set, batch, lr);
            }
            trace.push(self.mean_loss(set));
        }
        trace
    }

    pub fn checkpoint(&self, kind: &str) -> Checkpoint {
        Checkpoint {
            version: Checkpoint::VERSION,
            kind: kind.to_string(),
            input_dim: 0,
            size: self.encoder.output_dim(),
            rho: 0.0,
            leak: 0.0,
            seed: 0,
            w_out: self.w_out.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

impl<T: Real> EsnModel<T> {
    pub fn esn_checkpoint(&self) -> Checkpoint {
        let r = &self.encoder;
        Checkpoint {
            input_dim: r.input_dim,
            rho: r.rho,
            leak: r.leak,
            seed: r.seed,
            ..self.checkpoint("esn")
        }
    }

    /// Rebuilds the reservoir from its seed and loads `w_out`.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.check_version()?;
        let reservoir = init_reservoir::<T>(ck.input_dim, ck.size, ck.rho, ck.seed)?.with_leak(ck.leak)?;
        Self::new(reservoir).with_weights(&ck.w_out)
    }
}

impl<T: Real> PerceptronModel<T> {
    pub fn perceptron_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            input_dim: self.encoder.input_dim,
            ..self.checkpoint("perceptron")
        }
    }

    pub fn from_perceptron_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.check_version()?;
        Self::new(MeanPool {
            input_dim: ck.input_dim,
        })
        .with_weights(&ck.w_out)
    }
}

impl<T: Real, E: SequenceEncoder<T>> ReadoutModel<T, E> {
    pub fn with_weights(mut self, w: &[f64]) -> Result<Self> {
        if w.len() != self.w_out.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} readout weights for dimension {}",
                w.len(),
                self.w_out.len()
            )));
        }
        self.w_out = DVector::from_iterator(w.len(), w.iter().map(|v| T::lit(*v)));
        Ok(self)
    }
}

/// Serializable model: the reservoir is stored by seed, never densely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: String,
    pub input_dim: usize,
    pub size: usize,
    pub rho: f64,
    pub leak: f64,
    pub seed: u64,
    pub w_out: Vec<f64>,
}

impl Checkpoint {
    pub const VERSION: u32 = 1;

    fn check_version(&self) -> Result<()> {
        if self.version != Self::VERSION {
            return Err(Error::SchemaMismatch(format!(
                "checkpoint version {} (expected {})",
                self.version,
                Self::VERSION
            )));
        }
        Ok(())
    }
}
