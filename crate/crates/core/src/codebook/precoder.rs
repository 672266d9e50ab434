use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::pmi::{dequantize_amplitude, dequantize_phase};
use super::{DftBeamGrid, ETypeIIPmi, TypeIPmi};
use crate::error::{Error, Result};
use crate::scalar::{abs2, cis, cis_f64, czero, Cx, Real};

/// Type I precoder `W = W1·W2` on one subband (`n_ports × rank`).
///
/// Layer `r` is `[b; c·b] / sqrt(2R)` with the grid's unit-norm beam `b`,
/// which equals the `1/sqrt(2·R·N1·N2)` scaling of unnormalized DFT beams.
pub fn build_type1_precoder<T: Real>(
    pmi: &TypeIPmi,
    grid: &DftBeamGrid<T>,
    subband: usize,
) -> Result<DMatrix<Cx<T>>> {
    let config = grid.config();
    pmi.validate(config)?;
    if subband >= config.n_subbands {
        return Err(Error::IndexOutOfRange {
            index: subband,
            limit: config.n_subbands,
        });
    }
    let ne = config.n_elements();
    let scale = T::lit(1.0 / ((2 * pmi.rank) as f64).sqrt());
    let mut w = DMatrix::from_element(2 * ne, pmi.rank, czero());
    for layer in 0..pmi.rank {
        let (b1, b2) = pmi.layer_beam(layer, config);
        let beam = grid.column(b1, b2);
        let phi = pmi.cophase_factor::<T>(subband, layer);
        for e in 0..ne {
            w[(e, layer)] = beam[e] * scale;
            w[(ne + e, layer)] = beam[e] * phi * scale;
        }
    }
    Ok(w)
}

/// Per-subband EType II precoders.
#[derive(Debug, Clone, PartialEq)]
pub struct ETypeIIPrecoder<T: Real> {
    /// One `n_ports × rank` matrix per subband.
    pub per_subband: Vec<DMatrix<Cx<T>>>,
    /// Layers with no usable coefficient; their columns are all zero.
    pub degenerate: Vec<bool>,
}

/// Reconstructs `W1·W̃2·Wf` for every subband.
///
/// Each layer column is normalized per subband to power `1/rank`, so every
/// subband precoder carries unit total power.
pub fn build_etype2_precoder<T: Real>(
    pmi: &ETypeIIPmi,
    grid: &DftBeamGrid<T>,
) -> Result<ETypeIIPrecoder<T>> {
    let config = grid.config();
    let l = config.l_beams;
    let m = pmi.basis_set.len();
    let rows = 2 * l;
    for layer in &pmi.layers {
        if let Some(c) = layer.coeffs.iter().find(|c| c.row >= rows || c.col >= m) {
            return Err(Error::InvalidCoefficient { row: c.row, col: c.col });
        }
    }
    if pmi.beam_set.len() != l || pmi.layers.len() != pmi.rank {
        return Err(Error::InvalidPmi("beam set or layer count mismatch".into()));
    }
    let ne = config.n_elements();
    let n_sb = config.n_subbands;

    // W1 beams (n1·n2 × L)
    let beams: Vec<usize> = pmi
        .beam_set
        .iter()
        .map(|&b| grid.orthogonal_col_index(b, pmi.rotation))
        .collect();
    let b = grid.columns().select_columns(&beams);

    // dequantized W̃2 per layer (2L × M)
    let combos: Vec<DMatrix<Cx<T>>> = pmi
        .layers
        .iter()
        .map(|layer| {
            let mut c = DMatrix::from_element(rows, m, czero());
            for q in &layer.coeffs {
                c[(q.row, q.col)] = cis(dequantize_phase::<T>(q.phase, config.phase_bits))
                    * dequantize_amplitude::<T>(q.amp);
            }
            c
        })
        .collect();

    let layer_power = T::one() / T::from_usize_lossy(pmi.rank);
    let mut degenerate = vec![false; pmi.rank];
    let mut per_subband = Vec::with_capacity(n_sb);
    for sb in 0..n_sb {
        // column sb of Wf
        let f = DVector::from_fn(m, |k, _| {
            let turns = ((pmi.basis_set[k] * sb) % n_sb) as f64 / n_sb as f64;
            cis_f64::<T>(2.0 * PI * turns)
        });
        let mut w = DMatrix::from_element(2 * ne, pmi.rank, czero());
        for (layer, combo) in combos.iter().enumerate() {
            let y = combo * &f;
            let pol0 = &b * y.rows(0, l);
            let pol1 = &b * y.rows(l, l);
            let power: T = pol0.iter().chain(pol1.iter()).map(|z| abs2(*z)).fold(T::zero(), |a, x| a + x);
            if power <= T::zero() {
                degenerate[layer] = true;
                continue;
            }
            let scale = (layer_power / power).sqrt();
            for e in 0..ne {
                w[(e, layer)] = pol0[e] * scale;
                w[(ne + e, layer)] = pol1[e] * scale;
            }
        }
        per_subband.push(w);
    }
    Ok(ETypeIIPrecoder {
        per_subband,
        degenerate,
    })
}
