//! Policy comparison on stale CSI: fixed Type I, fixed EType II, the
//! federated ESN's choice, and the per-sample utility oracle.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use nr_cba_core::adaptation::{se_gain, utility, CodebookChoice};
use nr_cba_core::fed::{derive_seed, execute};
use nr_cba_core::rc::EsnModel;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::{create_dir, fmt_f64, write_csv, write_manifest};
use crate::pipeline::{run_episode, stale_outcome, Context, STREAM_EVAL};

pub const POLICIES: [&str; 4] = ["type1", "etype2", "adaptive", "oracle"];
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub snr_db: f64,
    pub policy: String,
    pub mean_se: f64,
    pub mean_overhead_bits: f64,
    pub mean_utility: f64,
    /// Agreement of the adaptive choice with the fresh-CSI label.
    pub accuracy: Option<f64>,
    pub seeds: usize,
}

/// Per-seed outcome of one evaluation cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedEval {
    pub se: [f64; 4],
    pub bits: [u64; 4],
    pub utility: [f64; 4],
    pub adaptive_correct: bool,
}

fn cell_seed(cfg: &ExperimentConfig, scenario: usize, snr_db: f64, seed: usize) -> u64 {
    derive_seed(
        cfg.master_seed,
        &[STREAM_EVAL, scenario as u64, snr_db.to_bits(), seed as u64],
    )
}

fn evaluate_seed(
    ctx: &Context,
    model: &EsnModel<f64>,
    scenario: usize,
    snr_db: f64,
    seed: u64,
) -> Result<SeedEval> {
    let ep = run_episode(ctx, scenario, snr_db, seed)?;
    let stale = stale_outcome(ctx, &ep)?;
    let ucfg = &ctx.cfg.utility;
    let tax = stale.bits_etype2.saturating_sub(stale.bits_type1);
    let u_e2 = utility(
        CodebookChoice::ETypeII,
        se_gain(stale.se_etype2, stale.se_type1)?,
        tax,
        ucfg,
    );
    let pick = |c: CodebookChoice| match c {
        CodebookChoice::TypeI => (stale.se_type1, stale.bits_type1, 0.0),
        CodebookChoice::ETypeII => (stale.se_etype2, stale.bits_etype2, u_e2),
    };
    let adaptive = execute(model, &ep.sequence, DECISION_THRESHOLD);
    let oracle = if u_e2 > 0.0 {
        CodebookChoice::ETypeII
    } else {
        CodebookChoice::TypeI
    };
    let picks = [
        pick(CodebookChoice::TypeI),
        pick(CodebookChoice::ETypeII),
        pick(adaptive),
        pick(oracle),
    ];
    Ok(SeedEval {
        se: picks.map(|p| p.0),
        bits: picks.map(|p| p.1),
        utility: picks.map(|p| p.2),
        adaptive_correct: adaptive == ep.last.choice(),
    })
}

/// Every (scenario, SNR) cell over `eval_seeds` seeds, in config order.
pub fn evaluate(cfg: &ExperimentConfig, model: &EsnModel<f64>) -> Result<Vec<ResultRow>> {
    let ctx = Context::new(cfg)?;
    let cells: Vec<(usize, f64)> = (0..cfg.scenarios.len())
        .flat_map(|s| cfg.snr_grid_db.iter().map(move |&snr| (s, snr)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.eval_seeds).map(move |k| (c, k)))
        .collect();
    let evals = jobs
        .par_iter()
        .map(|&(c, k)| {
            let (s, snr) = cells[c];
            evaluate_seed(&ctx, model, s, snr, cell_seed(cfg, s, snr, k))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(cells.len() * POLICIES.len());
    for (c, &(s, snr)) in cells.iter().enumerate() {
        let cell = &evals[c * cfg.eval_seeds..(c + 1) * cfg.eval_seeds];
        let n = cell.len().max(1) as f64;
        for (p, name) in POLICIES.iter().enumerate() {
            rows.push(ResultRow {
                scenario: cfg.scenarios[s].name.clone(),
                snr_db: snr,
                policy: name.to_string(),
                mean_se: cell.iter().map(|e| e.se[p]).sum::<f64>() / n,
                mean_overhead_bits: cell.iter().map(|e| e.bits[p] as f64).sum::<f64>() / n,
                mean_utility: cell.iter().map(|e| e.utility[p]).sum::<f64>() / n,
                accuracy: (*name == "adaptive")
                    .then(|| cell.iter().filter(|e| e.adaptive_correct).count() as f64 / n),
                seeds: cell.len(),
            });
        }
    }
    Ok(rows)
}

pub fn header() -> Vec<String> {
    [
        "scenario",
        "snr_db",
        "policy",
        "mean_se",
        "mean_overhead_bits",
        "mean_utility",
        "accuracy",
        "seeds",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn to_record(r: &ResultRow) -> Vec<String> {
    vec![
        r.scenario.clone(),
        fmt_f64(r.snr_db),
        r.policy.clone(),
        fmt_f64(r.mean_se),
        fmt_f64(r.mean_overhead_bits),
        fmt_f64(r.mean_utility),
        r.accuracy.map(fmt_f64).unwrap_or_default(),
        r.seeds.to_string(),
    ]
}

pub fn write(dir: &Path, file: &str, cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    create_dir(dir)?;
    let records: Vec<Vec<String>> = rows.iter().map(to_record).collect();
    write_csv(&dir.join(file), &cfg.hash(), &header(), &records)?;
    write_manifest(dir, "evaluate", cfg, &[PathBuf::from(file)])
}
