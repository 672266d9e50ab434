//! The four CLI commands. Output layout under `--out`:
//! `dataset/`, `model/`, `evaluate/results.csv`, `sweep/sweep.csv`.

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::evaluate::{self, ResultRow};
use crate::io::{create_dir, write_csv, write_manifest};
use crate::{dataset, train};

pub fn cmd_dataset(cfg: &ExperimentConfig, out: &Path) -> Result<dataset::Dataset> {
    let data = dataset::generate(cfg)?;
    dataset::write(&out.join("dataset"), cfg, &data)?;
    Ok(data)
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<train::TrainSummary> {
    cfg.validate()?;
    let data = dataset::read(&out.join("dataset"), cfg)?;
    let summary = train::train(cfg, &data)?;
    train::write(&out.join("model"), cfg, &summary)?;
    Ok(summary)
}

pub fn cmd_evaluate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let model = train::load_esn(&out.join("model"), cfg)?;
    let rows = evaluate::evaluate(cfg, &model)?;
    evaluate::write(&out.join("evaluate"), "results.csv", cfg, &rows)?;
    Ok(rows)
}

/// Dataset, training and evaluation over the whole SNR grid. With
/// `reuse_model` one model serves every grid point; otherwise each point
/// gets its own dataset and model under `sweep/point{k}`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let root = out.join("sweep");
    create_dir(&root)?;
    let rows = if cfg.reuse_model {
        run_point(cfg, &root)?
    } else {
        let mut rows = Vec::new();
        for (k, &snr) in cfg.snr_grid_db.iter().enumerate() {
            let point = ExperimentConfig {
                snr_grid_db: vec![snr],
                ..cfg.clone()
            };
            rows.extend(run_point(&point, &root.join(format!("point{k}")))?);
        }
        sort_rows(cfg, &mut rows);
        rows
    };
    let records: Vec<Vec<String>> = rows.iter().map(evaluate::to_record).collect();
    write_csv(&root.join("sweep.csv"), &cfg.hash(), &evaluate::header(), &records)?;
    write_manifest(&root, "sweep", cfg, &[PathBuf::from("sweep.csv")])?;
    Ok(rows)
}

fn run_point(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ResultRow>> {
    cmd_dataset(cfg, dir)?;
    cmd_train(cfg, dir)?;
    cmd_evaluate(cfg, dir)
}

/// Scenario-major, then grid order, then policy order.
fn sort_rows(cfg: &ExperimentConfig, rows: &mut [ResultRow]) {
    let scen = |r: &ResultRow| cfg.scenarios.iter().position(|s| s.name == r.scenario);
    let snr = |r: &ResultRow| cfg.snr_grid_db.iter().position(|&s| s == r.snr_db);
    let pol = |r: &ResultRow| evaluate::POLICIES.iter().position(|&p| p == r.policy);
    rows.sort_by_key(|r| (scen(r), snr(r), pol(r)));
}
