//! One CSI episode: `seq_len` CSI-RS periods on an evolving channel, the
//! indicator sequence, and the utility label of the last period.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nr_cba_core::adaptation::{label_sample_with, LabelOutcome};
use nr_cba_core::channel::{evolve, make_profile, realize, ChannelProfile, ChannelRealization, TxArray};
use nr_cba_core::codebook::{build_beam_grid, etype2_overhead_bits, type1_overhead_bits, Pmi};
use nr_cba_core::features::{assemble, IndicatorSchema, IndicatorVector};
use nr_cba_core::fed::derive_seed;
use nr_cba_core::link::{mismatched_se, BeamProjection};
use nr_cba_core::BeamGrid;

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Stream tags keeping training, validation and evaluation seeds disjoint.
pub const STREAM_TRAIN: u64 = 0x7472;
pub const STREAM_VALIDATION: u64 = 0x7661;
pub const STREAM_EVAL: u64 = 0x6576;

pub struct Context {
    pub cfg: ExperimentConfig,
    pub grid: BeamGrid,
    pub schema: IndicatorSchema,
    pub tx: TxArray,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = build_beam_grid::<f64>(&cfg.codebook)?;
        Ok(Context {
            schema: IndicatorSchema::for_config(&cfg.codebook),
            tx: TxArray {
                n1: cfg.codebook.n1,
                n2: cfg.codebook.n2,
            },
            grid,
            cfg: cfg.clone(),
        })
    }

    pub fn noise_var(snr_db: f64) -> f64 {
        10f64.powf(-snr_db / 10.0)
    }
}

pub struct Episode {
    pub scenario: usize,
    pub snr_db: f64,
    pub profile: ChannelProfile,
    pub sequence: Vec<IndicatorVector<f64>>,
    /// Labeling of the last period (fresh CSI).
    pub last: LabelOutcome<f64>,
    pub last_channel: ChannelRealization<f64>,
}

/// Simulates one episode from `seed` for scenario `scenario` at `snr_db`.
pub fn run_episode(ctx: &Context, scenario: usize, snr_db: f64, seed: u64) -> Result<Episode> {
    let cfg = &ctx.cfg;
    let sc = &cfg.scenarios[scenario];
    let profile = make_profile(sc.profile, sc.speed_mps(), sc.delay_spread_s(), derive_seed(seed, &[1]))?;
    let noise_var = Context::noise_var(snr_db);
    let period = cfg.csi_period_ms * 1e-3;
    let mut h = realize::<f64>(&profile, cfg.n_rb, cfg.n_rx, ctx.tx, 0.0, derive_seed(seed, &[2]));
    let mut sequence = Vec::with_capacity(cfg.seq_len);
    let mut last = None;
    for step in 0..cfg.seq_len {
        if step > 0 {
            h = evolve(&h, &profile, period)?;
        }
        let proj = BeamProjection::new(&h, &ctx.grid);
        let outcome = label_sample_with(&h, &ctx.grid, &proj, &cfg.utility, noise_var)?;
        sequence.push(assemble(
            &h,
            &ctx.grid,
            &ctx.schema,
            &outcome.etype2,
            &outcome.type1_metrics,
            &outcome.etype2_metrics,
            profile.speed_mps,
            snr_db,
        )?);
        last = Some(outcome);
    }
    Ok(Episode {
        scenario,
        snr_db,
        profile,
        sequence,
        last: last.expect("seq_len >= 1"),
        last_channel: h,
    })
}

/// Weighted scenario draw and uniform SNR over the grid span.
pub fn draw_conditions(cfg: &ExperimentConfig, seed: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut scenario = cfg.scenarios.len() - 1;
    for (i, s) in cfg.scenarios.iter().enumerate() {
        acc += s.weight;
        if u < acc {
            scenario = i;
            break;
        }
    }
    let (lo, hi) = cfg.snr_span();
    let snr = lo + (hi - lo) * rng.random::<f64>();
    (scenario, snr)
}

/// Realized SE and overhead of both fixed codebooks under CSI staleness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaleOutcome {
    pub se_type1: f64,
    pub se_etype2: f64,
    pub bits_type1: u64,
    pub bits_etype2: u64,
}

pub fn stale_outcome(ctx: &Context, episode: &Episode) -> Result<StaleOutcome> {
    let dt = ctx.cfg.staleness_ms * 1e-3;
    let now = evolve(&episode.last_channel, &episode.profile, dt)?;
    let nv = Context::noise_var(episode.snr_db);
    let t1 = Pmi::TypeI(episode.last.type1.clone());
    let e2 = Pmi::ETypeII(episode.last.etype2.clone());
    Ok(StaleOutcome {
        se_type1: mismatched_se(&now, &t1, &ctx.grid, nv)?.se,
        se_etype2: mismatched_se(&now, &e2, &ctx.grid, nv)?.se,
        bits_type1: type1_overhead_bits(&ctx.cfg.codebook, t1.rank())?.total_bits,
        bits_etype2: etype2_overhead_bits(&ctx.cfg.codebook, e2.rank())?.total_bits,
    })
}
