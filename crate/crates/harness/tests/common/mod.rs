#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nr_cba::config::{default_scenarios, Scenario};
use nr_cba::ExperimentConfig;

/// A config small enough for a full pipeline in a few seconds.
pub fn tiny_config() -> ExperimentConfig {
    let scenarios: Vec<Scenario> = default_scenarios()
        .into_iter()
        .filter(|s| s.speed_kmh == 60.0 && s.name != "nlos_long_delay_60kmh")
        .map(|s| Scenario { weight: 0.5, ..s })
        .collect();
    let mut cfg = ExperimentConfig {
        samples_per_ue: 6,
        validation_samples: 6,
        seq_len: 2,
        eval_seeds: 2,
        snr_grid_db: vec![0.0, 30.0],
        scenarios,
        ..ExperimentConfig::default()
    };
    cfg.federation.n_ues = 2;
    cfg.federation.rounds = 2;
    cfg.federation.train.epochs = 2;
    cfg
}

pub fn write_config(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

pub fn nr_cba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nr-cba")).args(args).output().unwrap()
}

pub fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    nr_cba(&args)
}
