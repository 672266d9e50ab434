//! Labeled indicator sequences per UE, plus a held-out validation set.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nr_cba_core::adaptation::CodebookChoice;
use nr_cba_core::features::{LabeledSample, SCHEMA_VERSION};
use nr_cba_core::fed::derive_seed;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::io::{create_dir, fmt_f64, parse_f64, read_csv, read_json, write_csv, write_json, write_manifest};
use crate::pipeline::{draw_conditions, run_episode, Context, STREAM_TRAIN, STREAM_VALIDATION};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub scenario: String,
    pub snr_db: f64,
    pub u1: f64,
    pub sample: LabeledSample<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ues: Vec<Vec<SampleRecord>>,
    pub validation: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub seq_len: usize,
    pub dim: usize,
    pub feature_names: Vec<String>,
    pub n_ues: usize,
    pub config_hash: String,
    pub schema_hash: String,
}

fn sample_at(ctx: &Context, seed: u64) -> Result<SampleRecord> {
    let (scenario, snr_db) = draw_conditions(&ctx.cfg, seed);
    let ep = run_episode(ctx, scenario, snr_db, seed)?;
    Ok(SampleRecord {
        scenario: ctx.cfg.scenarios[scenario].name.clone(),
        snr_db,
        u1: ep.last.report.u1,
        sample: LabeledSample {
            sequence: ep.sequence,
            label: ep.last.choice(),
        },
    })
}

/// Runs inside the caller's rayon pool; output does not depend on its size.
pub fn generate(cfg: &ExperimentConfig) -> Result<Dataset> {
    let ctx = Context::new(cfg)?;
    let n_ues = cfg.federation.n_ues;
    let jobs: Vec<(usize, usize)> = (0..n_ues)
        .flat_map(|g| (0..cfg.samples_per_ue).map(move |i| (g, i)))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(g, i)| sample_at(&ctx, derive_seed(cfg.master_seed, &[STREAM_TRAIN, g as u64, i as u64])))
        .collect::<Result<Vec<_>>>()?;
    let mut ues = vec![Vec::with_capacity(cfg.samples_per_ue); n_ues];
    for ((g, _), s) in jobs.into_iter().zip(samples) {
        ues[g].push(s);
    }
    let validation = (0..cfg.validation_samples)
        .into_par_iter()
        .map(|i| sample_at(&ctx, derive_seed(cfg.master_seed, &[STREAM_VALIDATION, i as u64])))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { ues, validation })
}

fn header(cfg: &ExperimentConfig) -> Vec<String> {
    let names = nr_cba_core::features::IndicatorSchema::for_config(&cfg.codebook).names();
    let mut h: Vec<String> = ["scenario", "snr_db", "u1", "label"].iter().map(|s| s.to_string()).collect();
    for t in 0..cfg.seq_len {
        h.extend(names.iter().map(|n| format!("t{t}_{n}")));
    }
    h
}

fn to_row(r: &SampleRecord) -> Vec<String> {
    let mut row = vec![
        r.scenario.clone(),
        fmt_f64(r.snr_db),
        fmt_f64(r.u1),
        r.sample.label.label().to_string(),
    ];
    row.extend(r.sample.flatten().into_iter().map(fmt_f64));
    row
}

fn file_name(ue: Option<usize>) -> String {
    match ue {
        Some(g) => format!("ue{g}.csv"),
        None => "validation.csv".to_string(),
    }
}

/// Writes `<dir>/ue{g}.csv`, `validation.csv`, `dataset.json` and the manifest.
pub fn write(dir: &Path, cfg: &ExperimentConfig, data: &Dataset) -> Result<()> {
    create_dir(dir)?;
    let hash = cfg.hash();
    let header = header(cfg);
    let mut files = Vec::new();
    let sets = data
        .ues
        .iter()
        .enumerate()
        .map(|(g, s)| (Some(g), s))
        .chain(std::iter::once((None, &data.validation)));
    for (ue, set) in sets {
        let name = file_name(ue);
        let rows: Vec<Vec<String>> = set.iter().map(to_row).collect();
        write_csv(&dir.join(&name), &hash, &header, &rows)?;
        files.push(PathBuf::from(name));
    }
    let schema = nr_cba_core::features::IndicatorSchema::for_config(&cfg.codebook);
    let meta = DatasetMeta {
        schema_version: SCHEMA_VERSION,
        seq_len: cfg.seq_len,
        dim: schema.total_dim(),
        feature_names: schema.names(),
        n_ues: data.ues.len(),
        config_hash: hash,
        schema_hash: cfg.schema_hash(),
    };
    write_json(&dir.join("dataset.json"), &meta)?;
    files.push(PathBuf::from("dataset.json"));
    write_manifest(dir, "dataset", cfg, &files)
}

fn parse_rows(path: &Path, meta: &DatasetMeta) -> Result<Vec<SampleRecord>> {
    let table = read_csv(path)?;
    let width = 4 + meta.seq_len * meta.dim;
    if table.header.len() != width {
        return Err(HarnessError::Config(format!(
            "{}: {} columns, schema needs {width}",
            path.display(),
            table.header.len()
        )));
    }
    table
        .rows
        .iter()
        .map(|row| {
            let values = row[4..].iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
            let label = match row[3].as_str() {
                "0" => CodebookChoice::TypeI,
                "1" => CodebookChoice::ETypeII,
                other => return Err(HarnessError::Run(format!("bad label {other:?}"))),
            };
            Ok(SampleRecord {
                scenario: row[0].clone(),
                snr_db: parse_f64(&row[1])?,
                u1: parse_f64(&row[2])?,
                sample: LabeledSample::from_flat(&values, meta.seq_len, label)?,
            })
        })
        .collect()
}

/// Loads a dataset written by [`write`], checking it matches `cfg`'s schema.
pub fn read(dir: &Path, cfg: &ExperimentConfig) -> Result<Dataset> {
    let meta: DatasetMeta = read_json(&dir.join("dataset.json"))?;
    if meta.schema_hash != cfg.schema_hash() || meta.schema_version != SCHEMA_VERSION {
        return Err(HarnessError::Config(format!(
            "dataset in {} was built for a different codebook/feature schema",
            dir.display()
        )));
    }
    let ues = (0..meta.n_ues)
        .map(|g| parse_rows(&dir.join(file_name(Some(g))), &meta))
        .collect::<Result<Vec<_>>>()?;
    let validation = parse_rows(&dir.join(file_name(None)), &meta)?;
    Ok(Dataset { ues, validation })
}

impl Dataset {
    pub fn samples(set: &[SampleRecord]) -> Vec<LabeledSample<f64>> {
        set.iter().map(|r| r.sample.clone()).collect()
    }
}
