use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::overhead::k_nz_per_layer;
use super::{CodebookConfig, CodebookKind};
use crate::error::{Error, Result};
use crate::scalar::{abs2, Cx, Real};

/// Type I report: one wideband beam pair, per-layer orthogonal offsets and
/// per-subband QPSK co-phasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeIPmi {
    pub i11: usize,
    pub i12: usize,
    /// Entry of the offset table used by layer 0; layer `l` uses entry
    /// `(offset_sel + l) mod 4`. Carried by the 2-bit offset field.
    pub offset_sel: u8,
    /// Co-phase index per subband, `c ∈ {0,1,2,3}` (rank 1) or `{0,2}` (rank >= 2).
    pub cophase: Vec<u8>,
    pub rank: usize,
}

impl TypeIPmi {
    /// Beam offset `(k1, k2)` of `layer`, drawn from {(0,0), (o1,0), (0,o2), (o1,o2)}.
    pub fn layer_offset(&self, layer: usize, config: &CodebookConfig) -> (usize, usize) {
        match (self.offset_sel as usize + layer) % 4 {
            0 => (0, 0),
            1 => (config.o1, 0),
            2 => (0, config.o2),
            _ => (config.o1, config.o2),
        }
    }

    /// Grid beam `(i11 + k1, i12 + k2)` of `layer`, wrapped to the grid extent.
    pub fn layer_beam(&self, layer: usize, config: &CodebookConfig) -> (usize, usize) {
        let (k1, k2) = self.layer_offset(layer, config);
        (
            (self.i11 + k1) % (config.n1 * config.o1),
            (self.i12 + k2) % (config.n2 * config.o2),
        )
    }

    /// Second-polarization factor of `layer` on `subband`: `j^c`, sign-flipped on odd layers.
    pub fn cophase_factor<T: Real>(&self, subband: usize, layer: usize) -> Cx<T> {
        let c = self.cophase[subband] as usize % 4;
        let base = match c {
            0 => Cx::new(T::one(), T::zero()),
            1 => Cx::new(T::zero(), T::one()),
            2 => Cx::new(-T::one(), T::zero()),
            _ => Cx::new(T::zero(), -T::one()),
        };
        if layer % 2 == 1 {
            -base
        } else {
            base
        }
    }

    pub fn validate(&self, config: &CodebookConfig) -> Result<()> {
        let err = |m: String| Err(Error::InvalidPmi(m));
        if self.rank == 0 || self.rank > config.max_rank {
            return err(format!("rank {} outside [1, {}]", self.rank, config.max_rank));
        }
        if self.i11 >= config.n1 * config.o1 || self.i12 >= config.n2 * config.o2 {
            return err(format!("beam ({}, {}) outside grid", self.i11, self.i12));
        }
        if self.offset_sel > 3 {
            return err(format!("offset selector {} > 3", self.offset_sel));
        }
        if self.cophase.len() != config.n_subbands {
            return err(format!(
                "{} co-phase entries for {} subbands",
                self.cophase.len(),
                config.n_subbands
            ));
        }
        for &c in &self.cophase {
            let ok = if self.rank == 1 { c < 4 } else { c == 0 || c == 2 };
            if !ok {
                return err(format!("co-phase index {c} invalid at rank {}", self.rank));
            }
        }
        Ok(())
    }
}

/// One retained linear-combination coefficient of an EType II layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coefficient {
    /// Beam-polarization row in `[0, 2L)`.
    pub row: usize,
    /// Position in the selected frequency-basis set, `[0, M)`.
    pub col: usize,
    pub amp: u8,
    pub phase: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ETypeIILayer {
    /// Row holding the reference coefficient (amplitude 1, phase 0).
    pub strongest_row: usize,
    /// Nonzero coefficients in row-major `(row, col)` order.
    pub coeffs: Vec<Coefficient>,
}

/// EType II report: `W1` (rotation + L beams), shared frequency bases `Wf`,
/// and per-layer sparse quantized combination coefficients `W̃2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ETypeIIPmi {
    /// Sorted indices `l1·n2 + l2` into the n1·n2 orthogonal beams.
    pub beam_set: Vec<usize>,
    pub rotation: (usize, usize),
    /// Sorted subband-DFT basis indices in `[0, n_subbands)`.
    pub basis_set: Vec<usize>,
    pub layers: Vec<ETypeIILayer>,
    pub rank: usize,
}

impl ETypeIIPmi {
    pub fn validate(&self, config: &CodebookConfig) -> Result<()> {
        let err = |m: String| Err(Error::InvalidPmi(m));
        if self.rank == 0 || self.rank > config.max_rank || self.layers.len() != self.rank {
            return err(format!("rank {} with {} layers", self.rank, self.layers.len()));
        }
        if self.beam_set.len() != config.l_beams {
            return err(format!("{} beams, expected L = {}", self.beam_set.len(), config.l_beams));
        }
        strictly_increasing_below(&self.beam_set, config.n_elements(), "beam_set")?;
        if self.rotation.0 >= config.o1 || self.rotation.1 >= config.o2 {
            return err(format!("rotation {:?} outside oversampling", self.rotation));
        }
        let m = config.m_bases(self.rank);
        if self.basis_set.len() != m {
            return err(format!("{} bases, expected M = {m}", self.basis_set.len()));
        }
        strictly_increasing_below(&self.basis_set, config.n_subbands, "basis_set")?;
        let k_nz = k_nz_per_layer(config, self.rank);
        let rows = 2 * config.l_beams;
        for (li, layer) in self.layers.iter().enumerate() {
            if layer.coeffs.len() != k_nz {
                return err(format!("layer {li}: {} coefficients, expected {k_nz}", layer.coeffs.len()));
            }
            if layer.strongest_row >= rows {
                return err(format!("layer {li}: strongest row {} >= 2L", layer.strongest_row));
            }
            for pair in layer.coeffs.windows(2) {
                if (pair[0].row, pair[0].col) >= (pair[1].row, pair[1].col) {
                    return err(format!("layer {li}: coefficients not unique row-major"));
                }
            }
            for c in &layer.coeffs {
                if c.row >= rows || c.col >= m {
                    return Err(Error::InvalidCoefficient { row: c.row, col: c.col });
                }
                if (c.amp as u32) >= (1 << config.amp_bits) || (c.phase as u32) >= (1 << config.phase_bits) {
                    return err(format!("layer {li}: coefficient index out of range"));
                }
            }
        }
        Ok(())
    }
}

fn strictly_increasing_below(v: &[usize], limit: usize, what: &str) -> Result<()> {
    if v.windows(2).any(|w| w[0] >= w[1]) || v.iter().any(|&x| x >= limit) {
        return Err(Error::InvalidPmi(format!(
            "{what} must be strictly increasing below {limit}"
        )));
    }
    Ok(())
}

/// Either codebook's report.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pmi {
    TypeI(TypeIPmi),
    ETypeII(ETypeIIPmi),
}

impl Pmi {
    pub fn kind(&self) -> CodebookKind {
        match self {
            Pmi::TypeI(_) => CodebookKind::TypeI,
            Pmi::ETypeII(_) => CodebookKind::ETypeII,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Pmi::TypeI(p) => p.rank,
            Pmi::ETypeII(p) => p.rank,
        }
    }
}

/// Amplitude ladder `2^(-a/2)`: {1, 2^-0.5, …, 2^-3.5} for 3 bits.
pub fn dequantize_amplitude<T: Real>(index: u8) -> T {
    T::lit((-0.5 * index as f64).exp2())
}

/// Uniform `2^phase_bits`-PSK phase in radians.
pub fn dequantize_phase<T: Real>(index: u8, phase_bits: u32) -> T {
    T::lit(2.0 * PI * index as f64 / (1u32 << phase_bits) as f64)
}

/// Sparsifies and quantizes one layer's `2L × M` combination matrix.
///
/// The `k_nz` largest-magnitude entries are kept (ties to the lower
/// row-major position), everything is normalized by the strongest entry,
/// and amplitude/phase are rounded to the nearest ladder point.
pub fn quantize_layer<T: Real>(
    coeffs: &DMatrix<Cx<T>>,
    k_nz: usize,
    config: &CodebookConfig,
) -> ETypeIILayer {
    let (rows, cols) = coeffs.shape();
    let k_nz = k_nz.min(rows * cols);
    let mut order: Vec<(usize, f64)> = (0..rows * cols)
        .map(|flat| {
            let (r, c) = (flat / cols, flat % cols);
            (flat, abs2(coeffs[(r, c)]).as_f64())
        })
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<usize> = order[..k_nz].iter().map(|&(f, _)| f).collect();
    let strongest = order.first().map(|&(f, _)| f).unwrap_or(0);
    kept.sort_unstable();

    let amp_max = (1u32 << config.amp_bits) - 1;
    let n_phase = 1u32 << config.phase_bits;
    let reference = coeffs[(strongest / cols, strongest % cols)];
    let ref_mag2 = abs2(reference).as_f64();

    let coeffs_out = kept
        .iter()
        .map(|&flat| {
            let (row, col) = (flat / cols, flat % cols);
            if ref_mag2 == 0.0 {
                let amp = if flat == strongest { 0 } else { amp_max as u8 };
                return Coefficient { row, col, amp, phase: 0 };
            }
            let z = coeffs[(row, col)] / reference;
            let (re, im) = (z.re.as_f64(), z.im.as_f64());
            let mag = (re * re + im * im).sqrt();
            let amp = if mag > 0.0 {
                (-2.0 * mag.log2()).round().clamp(0.0, amp_max as f64) as u8
            } else {
                amp_max as u8
            };
            let turns = im.atan2(re) / (2.0 * PI);
            let phase = ((turns * n_phase as f64).round() as i64).rem_euclid(n_phase as i64) as u8;
            Coefficient { row, col, amp, phase }
        })
        .collect();
    ETypeIILayer {
        strongest_row: if rows == 0 { 0 } else { strongest / cols },
        coeffs: coeffs_out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_ladder_endpoints() {
        assert_eq!(dequantize_amplitude::<f64>(0), 1.0);
        assert!((dequantize_amplitude::<f64>(7) - 2f64.powf(-3.5)).abs() < 1e-15);
    }

    #[test]
    fn strongest_coefficient_quantizes_to_unit_reference() {
        let cfg = CodebookConfig::reference();
        let m = DMatrix::from_fn(2, 2, |r, c| Cx::new((r + 2 * c) as f64 + 0.5, 0.3 * r as f64));
        let layer = quantize_layer(&m, 3, &cfg);
        assert_eq!(layer.coeffs.len(), 3);
        let strongest = layer
            .coeffs
            .iter()
            .find(|c| c.row == layer.strongest_row && c.amp == 0 && c.phase == 0);
        assert!(strongest.is_some());
        // (0,0) is the weakest entry and is dropped
        assert!(!layer.coeffs.iter().any(|c| c.row == 0 && c.col == 0));
    }

    #[test]
    fn phase_and_amplitude_rounding() {
        let cfg = CodebookConfig::reference();
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let m = DMatrix::from_row_slice(1, 2, &[Cx::new(1.0, 0.0), Cx::new(0.0, half)]);
        let layer = quantize_layer(&m, 2, &cfg);
        assert_eq!(layer.coeffs[1].amp, 1);
        assert_eq!(layer.coeffs[1].phase, 4);
    }

    #[test]
    fn type1_validation_rejects_bad_cophase() {
        let cfg = CodebookConfig::reference();
        let mut pmi = TypeIPmi {
            i11: 0,
            i12: 0,
            offset_sel: 0,
            cophase: vec![1; cfg.n_subbands],
            rank: 2,
        };
        assert!(pmi.validate(&cfg).is_err());
        pmi.cophase = vec![2; cfg.n_subbands];
        assert!(pmi.validate(&cfg).is_ok());
    }
}
