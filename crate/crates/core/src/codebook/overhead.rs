use serde::{Deserialize, Serialize};

use super::CodebookConfig;
use crate::error::{Error, Result};

/// Bit budget of one PMI report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub wideband_bits: u64,
    pub subband_bits: u64,
    pub per_layer_bits: Vec<u64>,
    pub total_bits: u64,
}

impl OverheadReport {
    fn new(wideband_bits: u64, subband_bits: u64, per_layer_bits: Vec<u64>) -> Self {
        let total_bits = wideband_bits + subband_bits + per_layer_bits.iter().sum::<u64>();
        OverheadReport {
            wideband_bits,
            subband_bits,
            per_layer_bits,
            total_bits,
        }
    }
}

/// Exact binomial coefficient via the multiplicative formula.
pub fn binomial(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc·(n-i) is divisible by (i+1): product of i+1 consecutive integers
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or(Error::Overflow { n, k })?
            / (i as u128 + 1);
    }
    Ok(acc)
}

/// `ceil(log2(x))`, with `ceil_log2(0) = ceil_log2(1) = 0`.
pub fn ceil_log2(x: u128) -> u32 {
    if x <= 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

fn exact_log2(field: &'static str, value: usize) -> Result<u64> {
    if value.is_power_of_two() {
        Ok(value.trailing_zeros() as u64)
    } else {
        Err(Error::NonPowerOfTwo { field, value })
    }
}

fn check_rank(config: &CodebookConfig, rank: usize) -> Result<()> {
    if rank == 0 || rank > config.max_rank {
        return Err(Error::IndexOutOfRange {
            index: rank,
            limit: config.max_rank,
        });
    }
    Ok(())
}

/// Nonzero coefficients kept per layer: `ceil(beta·2·L·M)`.
///
/// A 1e-9 slack absorbs binary rounding of `beta` (0.3·10 must give 3, not 4).
pub fn k_nz_per_layer(config: &CodebookConfig, rank: usize) -> usize {
    let positions = 2 * config.l_beams * config.m_bases(rank);
    let k = (config.beta * positions as f64 - 1e-9).ceil().max(0.0) as usize;
    k.min(positions)
}

/// Type I overhead: `log2(n1·o1) + log2(n2·o2) + 2` wideband bits and
/// 2 (rank 1) or 1 (rank >= 2) co-phase bits per subband.
pub fn type1_overhead_bits(config: &CodebookConfig, rank: usize) -> Result<OverheadReport> {
    check_rank(config, rank)?;
    let wideband = exact_log2("n1·o1", config.n1 * config.o1)?
        + exact_log2("n2·o2", config.n2 * config.o2)?
        + 2;
    let per_subband = if rank == 1 { 2 } else { 1 };
    Ok(OverheadReport::new(
        wideband,
        config.n_subbands as u64 * per_subband,
        Vec::new(),
    ))
}

/// EType II overhead: beam-subset and rotation indices, frequency-basis
/// subset index, and `5 + 7·K_nz + 2·L·M` bits for each layer.
pub fn etype2_overhead_bits(config: &CodebookConfig, rank: usize) -> Result<OverheadReport> {
    check_rank(config, rank)?;
    let m = config.m_bases(rank);
    let beam_sel = ceil_log2(binomial(config.n_elements(), config.l_beams)?) as u64;
    let rotation = ceil_log2((config.o1 * config.o2) as u128) as u64;
    let basis_sel = ceil_log2(binomial(config.n_subbands, m)?) as u64;
    let coef_bits = (config.amp_bits + config.phase_bits) as u64;
    let layer = 5 + coef_bits * k_nz_per_layer(config, rank) as u64 + (2 * config.l_beams * m) as u64;
    Ok(OverheadReport::new(
        beam_sel + rotation,
        basis_sel,
        vec![layer; rank],
    ))
}

/// EType II total minus Type I total at the given ranks.
pub fn overhead_tax(config: &CodebookConfig, rank_type1: usize, rank_type2: usize) -> Result<u64> {
    let type1 = type1_overhead_bits(config, rank_type1)?.total_bits;
    let etype2 = etype2_overhead_bits(config, rank_type2)?.total_bits;
    etype2
        .checked_sub(type1)
        .ok_or(Error::NegativeTax { etype2, type1 })
}

/// Colex rank of a strictly increasing subset: `Σ_i C(c_i, i+1)`.
pub fn rank_combination(subset: &[usize]) -> Result<u128> {
    let mut idx: u128 = 0;
    for (i, &c) in subset.iter().enumerate() {
        if i > 0 && subset[i - 1] >= c {
            return Err(Error::InvalidPmi("subset not strictly increasing".into()));
        }
        idx += binomial(c, i + 1)?;
    }
    Ok(idx)
}

/// Inverse of [`rank_combination`] for `k`-subsets of `0..n`.
pub fn unrank_combination(mut idx: u128, n: usize, k: usize) -> Result<Vec<usize>> {
    if idx >= binomial(n, k)? {
        return Err(Error::Codec(format!("combination index {idx} >= C({n}, {k})")));
    }
    let mut out = vec![0; k];
    let mut upper = n;
    for i in (0..k).rev() {
        // largest c < upper with C(c, i+1) <= idx
        let mut c = upper - 1;
        while binomial(c, i + 1)? > idx {
            c -= 1;
        }
        out[i] = c;
        idx -= binomial(c, i + 1)?;
        upper = c;
    }
    Ok(out)
}
