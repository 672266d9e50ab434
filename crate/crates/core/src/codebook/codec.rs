//! Big-endian PMI bit strings.
//!
//! Field order is wideband, then subband, then per-layer; every field has
//! exactly the width counted by the overhead model, so an encoded report is
//! always `OverheadReport::total_bits` long.

use std::fmt;
use std::str::FromStr;

use super::overhead::{
    binomial, ceil_log2, etype2_overhead_bits, k_nz_per_layer, rank_combination,
    type1_overhead_bits, unrank_combination,
};
use super::{CodebookConfig, Coefficient, ETypeIILayer, ETypeIIPmi, TypeIPmi};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Codec(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitString { bits })
    }
}

#[derive(Debug, Default)]
pub struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push(&mut self, value: u128, width: u32) -> Result<()> {
        if width < 128 && value >> width != 0 {
            return Err(Error::Codec(format!("{value} does not fit in {width} bits")));
        }
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
        Ok(())
    }

    pub fn finish(self) -> BitString {
        BitString { bits: self.bits }
    }
}

pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(s: &'a BitString) -> Self {
        BitReader { bits: &s.bits, pos: 0 }
    }

    pub fn read(&mut self, width: u32) -> Result<u128> {
        let end = self.pos + width as usize;
        if end > self.bits.len() {
            return Err(Error::Codec(format!(
                "need {width} bits at offset {}, only {} left",
                self.pos,
                self.bits.len() - self.pos
            )));
        }
        let v = self.bits[self.pos..end]
            .iter()
            .fold(0u128, |acc, &b| (acc << 1) | b as u128);
        self.pos = end;
        Ok(v)
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.bits.len() {
            return Err(Error::Codec(format!(
                "{} trailing bits",
                self.bits.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn log2_width(n: usize) -> u32 {
    ceil_log2(n as u128)
}

pub fn encode_type1(pmi: &TypeIPmi, config: &CodebookConfig) -> Result<BitString> {
    pmi.validate(config)?;
    let report = type1_overhead_bits(config, pmi.rank)?;
    let mut w = BitWriter::new();
    w.push(pmi.i11 as u128, log2_width(config.n1 * config.o1))?;
    w.push(pmi.i12 as u128, log2_width(config.n2 * config.o2))?;
    w.push(pmi.offset_sel as u128, 2)?;
    for &c in &pmi.cophase {
        if pmi.rank == 1 {
            w.push(c as u128, 2)?;
        } else {
            w.push((c / 2) as u128, 1)?;
        }
    }
    let out = w.finish();
    debug_assert_eq!(out.len() as u64, report.total_bits);
    Ok(out)
}

pub fn decode_type1(bits: &BitString, config: &CodebookConfig, rank: usize) -> Result<TypeIPmi> {
    let report = type1_overhead_bits(config, rank)?;
    if bits.len() as u64 != report.total_bits {
        return Err(Error::Codec(format!(
            "Type I rank {rank} needs {} bits, got {}",
            report.total_bits,
            bits.len()
        )));
    }
    let mut r = BitReader::new(bits);
    let i11 = r.read(log2_width(config.n1 * config.o1))? as usize;
    let i12 = r.read(log2_width(config.n2 * config.o2))? as usize;
    let offset_sel = r.read(2)? as u8;
    let cophase = (0..config.n_subbands)
        .map(|_| {
            if rank == 1 {
                r.read(2).map(|v| v as u8)
            } else {
                r.read(1).map(|v| 2 * v as u8)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    let pmi = TypeIPmi {
        i11,
        i12,
        offset_sel,
        cophase,
        rank,
    };
    pmi.validate(config)?;
    Ok(pmi)
}

pub fn encode_etype2(pmi: &ETypeIIPmi, config: &CodebookConfig) -> Result<BitString> {
    pmi.validate(config)?;
    let report = etype2_overhead_bits(config, pmi.rank)?;
    let m = config.m_bases(pmi.rank);
    let rows = 2 * config.l_beams;
    let mut w = BitWriter::new();
    w.push(
        rank_combination(&pmi.beam_set)?,
        ceil_log2(binomial(config.n_elements(), config.l_beams)?),
    )?;
    w.push(
        (pmi.rotation.0 * config.o2 + pmi.rotation.1) as u128,
        log2_width(config.o1 * config.o2),
    )?;
    w.push(
        rank_combination(&pmi.basis_set)?,
        ceil_log2(binomial(config.n_subbands, m)?),
    )?;
    for layer in &pmi.layers {
        w.push(layer.strongest_row as u128, 5)?;
        let mut bitmap = vec![false; rows * m];
        for c in &layer.coeffs {
            bitmap[c.row * m + c.col] = true;
        }
        for b in bitmap {
            w.push(b as u128, 1)?;
        }
        for c in &layer.coeffs {
            w.push(c.amp as u128, config.amp_bits)?;
            w.push(c.phase as u128, config.phase_bits)?;
        }
    }
    let out = w.finish();
    debug_assert_eq!(out.len() as u64, report.total_bits);
    Ok(out)
}

pub fn decode_etype2(bits: &BitString, config: &CodebookConfig, rank: usize) -> Result<ETypeIIPmi> {
    let report = etype2_overhead_bits(config, rank)?;
    if bits.len() as u64 != report.total_bits {
        return Err(Error::Codec(format!(
            "EType II rank {rank} needs {} bits, got {}",
            report.total_bits,
            bits.len()
        )));
    }
    let m = config.m_bases(rank);
    let rows = 2 * config.l_beams;
    let k_nz = k_nz_per_layer(config, rank);
    let mut r = BitReader::new(bits);
    let beam_idx = r.read(ceil_log2(binomial(config.n_elements(), config.l_beams)?))?;
    let beam_set = unrank_combination(beam_idx, config.n_elements(), config.l_beams)?;
    let rot = r.read(log2_width(config.o1 * config.o2))? as usize;
    let rotation = (rot / config.o2, rot % config.o2);
    let basis_idx = r.read(ceil_log2(binomial(config.n_subbands, m)?))?;
    let basis_set = unrank_combination(basis_idx, config.n_subbands, m)?;
    let mut layers = Vec::with_capacity(rank);
    for _ in 0..rank {
        let strongest_row = r.read(5)? as usize;
        let mut positions = Vec::with_capacity(k_nz);
        for flat in 0..rows * m {
            if r.read(1)? == 1 {
                positions.push((flat / m, flat % m));
            }
        }
        if positions.len() != k_nz {
            return Err(Error::Codec(format!(
                "bitmap holds {} coefficients, expected {k_nz}",
                positions.len()
            )));
        }
        let coeffs = positions
            .into_iter()
            .map(|(row, col)| {
                let amp = r.read(config.amp_bits)? as u8;
                let phase = r.read(config.phase_bits)? as u8;
                Ok(Coefficient { row, col, amp, phase })
            })
            .collect::<Result<Vec<_>>>()?;
        layers.push(ETypeIILayer {
            strongest_row,
            coeffs,
        });
    }
    r.finish()?;
    let pmi = ETypeIIPmi {
        beam_set,
        rotation,
        basis_set,
        layers,
        rank,
    };
    pmi.validate(config)?;
    Ok(pmi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writer_rejects_oversized_values() {
        let mut w = BitWriter::new();
        assert!(w.push(4, 2).is_err());
        assert!(w.push(3, 2).is_ok());
        assert_eq!(w.finish().to_string(), "11");
    }

    #[test]
    fn reader_reports_truncation() {
        let s: BitString = "101".parse().unwrap();
        let mut r = BitReader::new(&s);
        assert_eq!(r.read(2).unwrap(), 0b10);
        assert!(r.read(2).is_err());
    }

    #[test]
    fn type1_known_bits() {
        let cfg = CodebookConfig::single_port();
        let pmi = TypeIPmi {
            i11: 0,
            i12: 0,
            offset_sel: 2,
            cophase: vec![3],
            rank: 1,
        };
        let bits = encode_type1(&pmi, &cfg).unwrap();
        assert_eq!(bits.to_string(), "1011");
        assert_eq!(decode_type1(&bits, &cfg, 1).unwrap(), pmi);
    }

    #[test]
    fn decode_rejects_wrong_length() {
        let cfg = CodebookConfig::reference();
        let s: BitString = "0".repeat(37).parse().unwrap();
        assert!(decode_type1(&s, &cfg, 1).is_err());
    }
}
