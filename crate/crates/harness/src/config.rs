//! Experiment configuration (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nr_cba_core::adaptation::UtilityConfig;
use nr_cba_core::channel::{ProfileKind, DELAY_SPREAD_LONG_S, DELAY_SPREAD_SHORT_S};
use nr_cba_core::codebook::CodebookConfig;
use nr_cba_core::fed::FederationConfig;
use nr_cba_core::rc::{TrainConfig, DEFAULT_LEAK, DEFAULT_RESERVOIR_SIZE, DEFAULT_SPECTRAL_RADIUS};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub profile: ProfileKind,
    pub speed_kmh: f64,
    pub delay_spread_ns: f64,
    pub weight: f64,
}

impl Scenario {
    pub fn speed_mps(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    pub fn delay_spread_s(&self) -> f64 {
        self.delay_spread_ns * 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FedSection {
    pub n_ues: usize,
    pub rounds: usize,
    pub train: TrainConfig,
}

impl Default for FedSection {
    fn default() -> Self {
        let f = FederationConfig::default();
        FedSection {
            n_ues: f.n_ues,
            rounds: f.rounds,
            train: f.train,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirSection {
    pub size: usize,
    pub rho: f64,
    pub leak: f64,
    pub seed: u64,
}

impl Default for ReservoirSection {
    fn default() -> Self {
        ReservoirSection {
            size: DEFAULT_RESERVOIR_SIZE,
            rho: DEFAULT_SPECTRAL_RADIUS,
            leak: DEFAULT_LEAK,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub n_rb: usize,
    /// Receive antennas per UE.
    pub n_rx: usize,
    pub samples_per_ue: usize,
    pub validation_samples: usize,
    /// CSI-RS periods per sample.
    pub seq_len: usize,
    pub csi_period_ms: f64,
    /// Delay between the last CSI measurement and PDSCH transmission.
    pub staleness_ms: f64,
    pub eval_seeds: usize,
    pub snr_grid_db: Vec<f64>,
    /// Sweep: train once and evaluate every grid point with that model.
    pub reuse_model: bool,
    pub knn_k: usize,
    pub codebook: CodebookConfig,
    pub utility: UtilityConfig,
    pub federation: FedSection,
    pub reservoir: ReservoirSection,
    pub scenarios: Vec<Scenario>,
}

pub fn default_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();
    for (profile, ds) in [
        (ProfileKind::LosHighCorr, DELAY_SPREAD_SHORT_S),
        (ProfileKind::NlosRich, DELAY_SPREAD_SHORT_S),
        (ProfileKind::NlosLongDelay, DELAY_SPREAD_LONG_S),
    ] {
        for speed in [3.0, 60.0] {
            out.push(Scenario {
                name: format!("{}_{}kmh", profile.as_str(), speed as u32),
                profile,
                speed_kmh: speed,
                delay_spread_ns: (ds * 1e9).round(),
                weight: 1.0 / 6.0,
            });
        }
    }
    out
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 1,
            n_rb: 26,
            n_rx: 4,
            samples_per_ue: 200,
            validation_samples: 200,
            seq_len: 8,
            csi_period_ms: 5.0,
            staleness_ms: 1.0,
            eval_seeds: 20,
            snr_grid_db: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            reuse_model: true,
            knn_k: 5,
            codebook: CodebookConfig::reference(),
            utility: UtilityConfig::default(),
            federation: FedSection::default(),
            reservoir: ReservoirSection::default(),
            scenarios: default_scenarios(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.codebook
            .validate()
            .and_then(|_| self.codebook.validate_etype2())
            .map_err(|e| invalid(format!("codebook: {e}")))?;
        self.utility
            .validate()
            .map_err(|e| invalid(format!("utility: {e}")))?;
        self.federation_config()
            .validate()
            .map_err(|e| invalid(format!("federation: {e}")))?;
        if self.snr_grid_db.is_empty() {
            return Err(invalid("snr_grid_db must not be empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(invalid("snr_grid_db entries must be finite"));
        }
        if self.n_rb == 0 || self.n_rx == 0 || self.seq_len == 0 {
            return Err(invalid("n_rb, n_rx and seq_len must be positive"));
        }
        if !(self.csi_period_ms >= 0.0) || !(self.staleness_ms >= 0.0) {
            return Err(invalid("csi_period_ms and staleness_ms must be >= 0"));
        }
        if self.knn_k == 0 {
            return Err(invalid("knn_k must be positive"));
        }
        if self.scenarios.is_empty() {
            return Err(invalid("at least one scenario is required"));
        }
        for s in &self.scenarios {
            if !(s.weight >= 0.0) || !(s.speed_kmh >= 0.0) || !(s.delay_spread_ns > 0.0) {
                return Err(invalid(format!(
                    "scenario {}: weight and speed must be >= 0, delay spread > 0",
                    s.name
                )));
            }
        }
        let total: f64 = self.scenarios.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("scenario weights sum to {total}, expected 1")));
        }
        let r = &self.reservoir;
        if r.size == 0 || !(r.rho > 0.0 && r.rho < 1.0) || !(r.leak > 0.0 && r.leak <= 1.0) {
            return Err(invalid("reservoir: size > 0, rho in (0,1), leak in (0,1]"));
        }
        Ok(())
    }

    pub fn federation_config(&self) -> FederationConfig {
        FederationConfig {
            n_ues: self.federation.n_ues,
            rounds: self.federation.rounds,
            master_seed: self.master_seed,
            train: self.federation.train,
        }
    }

    /// Training SNRs are drawn uniformly over the span of the grid.
    pub fn snr_span(&self) -> (f64, f64) {
        let lo = self.snr_grid_db.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.snr_grid_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    /// Hash of everything a trained model's inputs depend on.
    pub fn schema_hash(&self) -> String {
        let key = serde_json::json!({
            "codebook": self.codebook,
            "seq_len": self.seq_len,
            "n_rx": self.n_rx,
            "reservoir": self.reservoir,
            "schema": nr_cba_core::features::SCHEMA_VERSION,
        });
        sha256_hex(key.to_string().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}
