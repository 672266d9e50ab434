//! Federated ESN training with perceptron and KNN baselines.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nr_cba_core::fed::{run_training, RoundLog};
use nr_cba_core::features::IndicatorSchema;
use nr_cba_core::rc::{init_reservoir, Checkpoint, EsnModel, MeanPool, PerceptronModel};

use crate::config::ExperimentConfig;
use crate::dataset::{Dataset, SampleRecord};
use crate::error::{HarnessError, Result};
use crate::io::{create_dir, fmt_f64, read_json, write_csv, write_json, write_manifest};
use crate::knn::Knn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub config_hash: String,
    pub schema_hash: String,
    pub input_dim: usize,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub esn: EsnModel<f64>,
    pub perceptron: PerceptronModel<f64>,
    pub esn_rounds: Vec<RoundLog>,
    pub perceptron_rounds: Vec<RoundLog>,
    pub knn_accuracy: f64,
}

impl TrainSummary {
    /// First 1-based ESN round whose validation loss is at or below the
    /// perceptron's final validation loss.
    pub fn esn_rounds_to_perceptron_final(&self) -> Option<usize> {
        let target = self.perceptron_rounds.last()?.val_loss;
        self.esn_rounds.iter().find(|r| r.val_loss <= target).map(|r| r.round)
    }
}

fn samples(set: &[SampleRecord]) -> Vec<nr_cba_core::features::LabeledSample<f64>> {
    Dataset::samples(set)
}

pub fn train(cfg: &ExperimentConfig, data: &Dataset) -> Result<TrainSummary> {
    let dim = IndicatorSchema::for_config(&cfg.codebook).total_dim();
    let fed = cfg.federation_config();
    if data.ues.len() != fed.n_ues {
        return Err(HarnessError::Config(format!(
            "dataset has {} UEs, config expects {}",
            data.ues.len(),
            fed.n_ues
        )));
    }
    if data.ues.iter().any(|u| u.is_empty()) {
        return Err(HarnessError::Config("training needs samples_per_ue >= 1".into()));
    }
    let local: Vec<_> = data.ues.iter().map(|u| samples(u)).collect();
    let validation = samples(&data.validation);

    let r = &cfg.reservoir;
    let reservoir = init_reservoir::<f64>(dim, r.size, r.rho, r.seed)?.with_leak(r.leak)?;
    let (esn, esn_rounds) = run_training(EsnModel::new(reservoir), &local, &validation, &fed, true)?;
    let (perceptron, perceptron_rounds) = run_training(
        PerceptronModel::new(MeanPool { input_dim: dim }),
        &local,
        &validation,
        &fed,
        true,
    )?;
    let pooled: Vec<_> = local.iter().flatten().cloned().collect();
    let knn_accuracy = Knn::fit(cfg.knn_k, &pooled).accuracy(&validation);
    Ok(TrainSummary {
        esn,
        perceptron,
        esn_rounds,
        perceptron_rounds,
        knn_accuracy,
    })
}

fn round_rows(model: &str, logs: &[RoundLog]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for log in logs {
        for (ue, (size, loss)) in log.sizes.iter().zip(&log.local_loss).enumerate() {
            rows.push(vec![
                model.to_string(),
                log.round.to_string(),
                ue.to_string(),
                size.to_string(),
                fmt_f64(*loss),
                fmt_f64(log.val_loss),
                fmt_f64(log.val_acc),
            ]);
        }
    }
    rows
}

/// Writes checkpoints, `rounds.csv`, `baselines.csv` and the manifest.
pub fn write(dir: &Path, cfg: &ExperimentConfig, s: &TrainSummary) -> Result<()> {
    create_dir(dir)?;
    let hash = cfg.hash();
    write_json(&dir.join("esn.json"), &s.esn.esn_checkpoint())?;
    write_json(&dir.join("perceptron.json"), &s.perceptron.perceptron_checkpoint())?;
    write_json(
        &dir.join("model.json"),
        &ModelMeta {
            config_hash: hash.clone(),
            schema_hash: cfg.schema_hash(),
            input_dim: s.esn.encoder.input_dim,
        },
    )?;
    let header: Vec<String> = [
        "model",
        "round",
        "ue",
        "dataset_size",
        "local_loss",
        "global_val_loss",
        "global_val_acc",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = round_rows("esn", &s.esn_rounds);
    rows.extend(round_rows("perceptron", &s.perceptron_rounds));
    write_csv(&dir.join("rounds.csv"), &hash, &header, &rows)?;

    let final_of = |logs: &[RoundLog]| logs.last().map_or((f64::NAN, f64::NAN), |l| (l.val_loss, l.val_acc));
    let (el, ea) = final_of(&s.esn_rounds);
    let (pl, pa) = final_of(&s.perceptron_rounds);
    let header: Vec<String> = ["model", "val_loss", "val_acc"].iter().map(|s| s.to_string()).collect();
    let rows = vec![
        vec!["esn".into(), fmt_f64(el), fmt_f64(ea)],
        vec!["perceptron".into(), fmt_f64(pl), fmt_f64(pa)],
        vec![format!("knn_k{}", cfg.knn_k), String::new(), fmt_f64(s.knn_accuracy)],
    ];
    write_csv(&dir.join("baselines.csv"), &hash, &header, &rows)?;
    let files: Vec<PathBuf> = ["esn.json", "perceptron.json", "model.json", "rounds.csv", "baselines.csv"]
        .iter()
        .map(PathBuf::from)
        .collect();
    write_manifest(dir, "train", cfg, &files)
}

/// Loads the ESN checkpoint, refusing one built for another schema.
pub fn load_esn(dir: &Path, cfg: &ExperimentConfig) -> Result<EsnModel<f64>> {
    let meta: ModelMeta = read_json(&dir.join("model.json"))?;
    if meta.schema_hash != cfg.schema_hash() {
        return Err(HarnessError::Config(format!(
            "checkpoint in {} was trained for a different codebook/feature schema",
            dir.display()
        )));
    }
    let ck: Checkpoint = read_json(&dir.join("esn.json"))?;
    Ok(EsnModel::from_checkpoint(&ck)?)
}
