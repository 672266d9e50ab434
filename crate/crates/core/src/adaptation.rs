//! Utility of switching from Type I to EType II and the per-sample label.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::codebook::{overhead_tax, CodebookKind, DftBeamGrid, ETypeIIPmi, TypeIPmi};
use crate::error::{Error, Result};
use crate::link::{select_etype2_pmi_with, select_type1_pmi_with, BeamProjection, LinkMetrics};
use crate::scalar::Real;

/// Codebook decision `A`: Type I (0) or EType II (1).
pub type CodebookChoice = CodebookKind;

pub const DEFAULT_LAMBDA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    /// Weight of the overhead tax, per bit.
    pub lambda: f64,
}

impl Default for UtilityConfig {
    fn default() -> Self {
        UtilityConfig {
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl UtilityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    /// SE gain of EType II over Type I.
    pub gain_type2: f64,
    pub tax_bits: u64,
    pub u0: f64,
    pub u1: f64,
    pub choice: CodebookChoice,
}

/// `se_choice / se_baseline - 1`.
pub fn se_gain(se_choice: f64, se_baseline: f64) -> Result<f64> {
    if se_baseline <= 1e-12 {
        return Err(Error::BaselineZero(se_baseline));
    }
    Ok(se_choice / se_baseline - 1.0)
}

/// `U = gain - λ·tax`; zero for the Type I baseline.
pub fn utility(choice: CodebookChoice, gain: f64, tax_bits: u64, cfg: &UtilityConfig) -> f64 {
    match choice {
        CodebookKind::TypeI => 0.0,
        CodebookKind::ETypeII => gain - cfg.lambda * tax_bits as f64,
    }
}

/// Builds the report from the two SEs and ranks; ties go to Type I.
pub fn utility_report(
    se_type1: f64,
    se_type2: f64,
    tax_bits: u64,
    cfg: &UtilityConfig,
) -> Result<UtilityReport> {
    let gain = se_gain(se_type2, se_type1)?;
    let u1 = utility(CodebookKind::ETypeII, gain, tax_bits, cfg);
    Ok(UtilityReport {
        gain_type2: gain,
        tax_bits,
        u0: 0.0,
        u1,
        choice: if u1 > 0.0 {
            CodebookKind::ETypeII
        } else {
            CodebookKind::TypeI
        },
    })
}

/// Everything measured while labeling one realization.
#[derive(Debug, Clone)]
pub struct LabelOutcome<T: Real> {
    pub report: UtilityReport,
    pub type1: TypeIPmi,
    pub type1_metrics: LinkMetrics<T>,
    pub etype2: ETypeIIPmi,
    pub etype2_metrics: LinkMetrics<T>,
}

impl<T: Real> LabelOutcome<T> {
    pub fn choice(&self) -> CodebookChoice {
        self.report.choice
    }
}

/// Runs both PMI searches on `h` and labels it with the utility argmax.
pub fn label_sample<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    util_cfg: &UtilityConfig,
    noise_var: T,
) -> Result<LabelOutcome<T>> {
    let proj = BeamProjection::new(h, grid);
    label_sample_with(h, grid, &proj, util_cfg, noise_var)
}

/// [`label_sample`] reusing precomputed beam projections.
pub fn label_sample_with<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    proj: &BeamProjection<T>,
    util_cfg: &UtilityConfig,
    noise_var: T,
) -> Result<LabelOutcome<T>> {
    util_cfg.validate()?;
    let (type1, type1_metrics) = select_type1_pmi_with(h, grid, proj, noise_var)?;
    let (etype2, etype2_metrics) = select_etype2_pmi_with(h, grid, proj, noise_var)?;
    let tax = overhead_tax(grid.config(), type1.rank, etype2.rank)?;
    let report = utility_report(
        type1_metrics.se.as_f64(),
        etype2_metrics.se.as_f64(),
        tax,
        util_cfg,
    )?;
    Ok(LabelOutcome {
        report,
        type1,
        type1_metrics,
        etype2,
        etype2_metrics,
    })
}
