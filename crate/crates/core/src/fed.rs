//! Federated readout training: broadcast, local SGD, size-weighted FedAvg.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::CodebookChoice;
use crate::error::{Error, Result};
use crate::features::{IndicatorVector, LabeledSample};
use crate::rc::{EncodedSet, ReadoutModel, SequenceEncoder, TrainConfig};
use crate::scalar::Real;

pub const DEFAULT_ROUNDS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FederationConfig {
    pub n_ues: usize,
    pub rounds: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub train: TrainConfig,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            n_ues: 8,
            rounds: DEFAULT_ROUNDS,
            master_seed: 1,
            train: TrainConfig::default(),
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ues == 0 || self.rounds == 0 {
            return Err(Error::InvalidConfig("n_ues and rounds must be >= 1".into()));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    /// 1-based round index.
    pub round: usize,
    pub sizes: Vec<usize>,
    /// Full-local-set loss after each UE's last epoch.
    pub local_loss: Vec<f64>,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Deterministic 64-bit stream id from a master seed and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    // splitmix64 finalizer per component
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

/// `Σ_g (|X_g| / Σ|X|)·w_g`; the shared encoder passes through.
pub fn fedavg<T: Real, E: SequenceEncoder<T>>(
    models: &[ReadoutModel<T, E>],
    sizes: &[usize],
) -> Result<ReadoutModel<T, E>> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidConfig("fedavg needs at least one model".into()))?;
    if models.len() != sizes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} models, {} sizes",
            models.len(),
            sizes.len()
        )));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidConfig("dataset sizes must be positive".into()));
    }
    let print = first.encoder.fingerprint();
    if models.iter().any(|m| m.encoder.fingerprint() != print || m.w_out.len() != first.w_out.len()) {
        return Err(Error::ReservoirMismatch);
    }
    let total = T::from_usize_lossy(sizes.iter().sum());
    let mut w = first.w_out.map(|_| T::zero());
    for (m, &s) in models.iter().zip(sizes) {
        let weight = T::from_usize_lossy(s) / total;
        w.iter_mut().zip(m.w_out.iter()).for_each(|(a, b)| *a += weight * *b);
    }
    let mut out = first.clone();
    out.w_out = w;
    Ok(out)
}

/// Runs `cfg.rounds` rounds over per-UE datasets and logs validation after
/// each aggregation. Every UE shuffles with the stream of the round, so the
/// result does not depend on UE scheduling.
pub fn run_training<T: Real, E: SequenceEncoder<T>>(
    init: ReadoutModel<T, E>,
    datasets: &[Vec<LabeledSample<T>>],
    validation: &[LabeledSample<T>],
    cfg: &FederationConfig,
    parallel: bool,
) -> Result<(ReadoutModel<T, E>, Vec<RoundLog>)> {
    cfg.validate()?;
    if datasets.is_empty() || datasets.iter().any(|d| d.is_empty()) {
        return Err(Error::InvalidConfig("every UE needs a non-empty dataset".into()));
    }
    let encode = |d: &Vec<LabeledSample<T>>| init.encode_dataset(d);
    let encoded: Vec<EncodedSet<T>> = if parallel {
        datasets.par_iter().map(encode).collect()
    } else {
        datasets.iter().map(encode).collect()
    };
    let val = init.encode_dataset(validation);
    let sizes: Vec<usize> = datasets.iter().map(|d| d.len()).collect();

    let mut global = init;
    let mut logs = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        let seed = derive_seed(cfg.master_seed, &[round as u64]);
        let local = |set: &EncodedSet<T>| {
            let mut m = global.clone();
            let trace = m.train_encoded(set, &cfg.train, seed);
            let last = trace.last().map_or_else(|| m.mean_loss(set), |v| *v);
            (m, last.as_f64())
        };
        let results: Vec<(ReadoutModel<T, E>, f64)> = if parallel {
            encoded.par_iter().map(local).collect()
        } else {
            encoded.iter().map(local).collect()
        };
        let (models, local_loss): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        global = fedavg(&models, &sizes)?;
        logs.push(RoundLog {
            round,
            sizes: sizes.clone(),
            local_loss,
            val_loss: global.mean_loss(&val).as_f64(),
            val_acc: global.accuracy(&val),
        });
    }
    Ok((global, logs))
}

/// `A = 1` iff the model's probability is strictly above `threshold`.
pub fn execute<T: Real, E: SequenceEncoder<T>>(
    model: &ReadoutModel<T, E>,
    sequence: &[IndicatorVector<T>],
    threshold: f64,
) -> CodebookChoice {
    if model.forward(sequence).as_f64() > threshold {
        CodebookChoice::ETypeII
    } else {
        CodebookChoice::TypeI
    }
}
