//! Experiment harness: dataset generation, federated training, policy
//! evaluation and SNR sweeps for codebook adaptation.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod knn;
pub mod pipeline;
pub mod train;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

/// Runs `f` on a dedicated pool of `threads` workers (0 = one per core).
pub fn with_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Run(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
