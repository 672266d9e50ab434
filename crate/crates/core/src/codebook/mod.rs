//! NR Type I and enhanced Type II precoding codebooks.
//!
//! The grid, PMI containers and precoder constructors are generic over the
//! scalar type. Overhead accounting and the PMI bit codec are integer-only:
//! the serialized bit width of a report *is* its feedback overhead.

mod codec;
mod config;
mod grid;
mod overhead;
mod pmi;
mod precoder;

pub use codec::{
    decode_etype2, decode_type1, encode_etype2, encode_type1, BitReader, BitString, BitWriter,
};
pub use config::CodebookConfig;
pub use grid::{build_beam_grid, DftBeamGrid};
pub use overhead::{
    binomial, ceil_log2, etype2_overhead_bits, k_nz_per_layer, overhead_tax, rank_combination,
    type1_overhead_bits, unrank_combination, OverheadReport,
};
pub use pmi::{
    dequantize_amplitude, dequantize_phase, quantize_layer, Coefficient, ETypeIILayer, ETypeIIPmi,
    Pmi, TypeIPmi,
};
pub use precoder::{build_etype2_precoder, build_type1_precoder, ETypeIIPrecoder};

/// Which codebook a report or decision refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    TypeI,
    ETypeII,
}

impl CodebookKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CodebookKind::TypeI => "type1",
            CodebookKind::ETypeII => "etype2",
        }
    }

    /// Binary label `A`: 0 for Type I, 1 for EType II.
    pub fn label(self) -> u8 {
        match self {
            CodebookKind::TypeI => 0,
            CodebookKind::ETypeII => 1,
        }
    }

    pub fn from_label(label: u8) -> Self {
        if label == 0 {
            CodebookKind::TypeI
        } else {
            CodebookKind::ETypeII
        }
    }
}
