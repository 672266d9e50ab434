//! CSI-indicator feature vectors.
//!
//! Layout: APS (16) ‖ DPS (16) ‖ rank ratio, velocity, SNR, CQI1, CQI2 ‖
//! per-row bitmap density (2L).

use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::adaptation::CodebookChoice;
use crate::channel::ChannelRealization;
use crate::codebook::{CodebookConfig, DftBeamGrid, ETypeIIPmi};
use crate::error::{Error, Result};
use crate::link::LinkMetrics;
use crate::scalar::{abs2, czero, Cx, Real};

pub const APS_BINS: usize = 16;
pub const DPS_BINS: usize = 16;
pub const SCALAR_FEATURES: usize = 5;
pub const VELOCITY_SCALE_MPS: f64 = 30.0;
pub const SNR_FLOOR_DB: f64 = -10.0;
pub const SNR_SPAN_DB: f64 = 60.0;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndicatorSchema {
    pub aps_bins: usize,
    pub dps_bins: usize,
    /// `2L` bitmap-density entries.
    pub bitmap_len: usize,
}

impl IndicatorSchema {
    pub fn for_config(config: &CodebookConfig) -> Self {
        IndicatorSchema {
            aps_bins: APS_BINS,
            dps_bins: DPS_BINS,
            bitmap_len: 2 * config.l_beams,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.aps_bins + self.dps_bins + SCALAR_FEATURES + self.bitmap_len
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.total_dim());
        out.extend((0..self.aps_bins).map(|i| format!("aps{i}")));
        out.extend((0..self.dps_bins).map(|i| format!("dps{i}")));
        out.extend(
            ["rank_ratio", "velocity_norm", "snr_norm", "cqi1_norm", "cqi2_norm"]
                .iter()
                .map(|s| s.to_string()),
        );
        out.extend((0..self.bitmap_len).map(|i| format!("bitmap{i}")));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorVector<T: Real> {
    pub values: Vec<T>,
}

impl<T: Real> IndicatorVector<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `T` consecutive indicator vectors and the label of the last period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample<T: Real> {
    pub sequence: Vec<IndicatorVector<T>>,
    pub label: CodebookChoice,
}

impl<T: Real> LabeledSample<T> {
    /// Row-major `T·dim` values.
    pub fn flatten(&self) -> Vec<T> {
        self.sequence.iter().flat_map(|v| v.values.iter().copied()).collect()
    }

    pub fn from_flat(values: &[T], seq_len: usize, label: CodebookChoice) -> Result<Self> {
        if seq_len == 0 || values.len() % seq_len != 0 {
            return Err(Error::SchemaMismatch(format!(
                "{} values do not split into {seq_len} steps",
                values.len()
            )));
        }
        let dim = values.len() / seq_len;
        Ok(LabeledSample {
            sequence: values
                .chunks(dim)
                .map(|c| IndicatorVector { values: c.to_vec() })
                .collect(),
            label,
        })
    }

    /// Mean of the sequence, for memoryless baselines.
    pub fn time_average(&self) -> Vec<T> {
        let dim = self.sequence.first().map_or(0, |v| v.len());
        let mut out = vec![T::zero(); dim];
        for v in &self.sequence {
            for (o, x) in out.iter_mut().zip(&v.values) {
                *o += *x;
            }
        }
        let n = T::from_usize_lossy(self.sequence.len().max(1));
        out.iter_mut().for_each(|x| *x /= n);
        out
    }
}

fn normalize_or_flat<T: Real>(mut v: Vec<T>) -> Vec<T> {
    let total = v.iter().fold(T::zero(), |a, b| a + *b);
    if total > T::zero() {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        let flat = T::one() / T::from_usize_lossy(v.len());
        v.iter_mut().for_each(|x| *x = flat);
    }
    v
}

/// Power on the `n1·n2` orthogonal beams of the unrotated grid, summed
/// over RBs, receive antennas and polarizations, folded into `bins`.
/// A zero channel yields a flat spectrum.
pub fn angle_power_spectrum<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    bins: usize,
) -> Vec<T> {
    let ne = grid.config().n_elements();
    let cols: Vec<usize> = (0..ne).map(|b| grid.orthogonal_col_index(b, (0, 0))).collect();
    let beams = grid.columns().select_columns(&cols);
    let mut power = vec![T::zero(); ne];
    for hn in &h.per_rb {
        for pol in 0..2 {
            let proj = hn.columns(pol * ne, ne) * &beams;
            for (b, col) in proj.column_iter().enumerate() {
                power[b] += col.iter().map(|z| abs2(*z)).fold(T::zero(), |a, x| a + x);
            }
        }
    }
    let mut out = vec![T::zero(); bins];
    for (b, p) in power.into_iter().enumerate() {
        out[b * bins / ne] += p;
    }
    normalize_or_flat(out)
}

/// Power-delay profile: inverse DFT of every antenna pair's response across
/// RBs, averaged over pairs and folded into `bins` uniform delay bins.
pub fn delay_power_spectrum<T: Real>(h: &ChannelRealization<T>, bins: usize) -> Vec<T> {
    let n_rb = h.n_rb();
    let mut taps = vec![T::zero(); n_rb];
    if n_rb > 0 {
        let (rows, cols) = h.per_rb[0].shape();
        // IDFT kernel e^{+j2π nk/N}
        let kernel = DMatrix::from_fn(n_rb, n_rb, |k, n| {
            let turns = ((n * k) % n_rb) as f64 / n_rb as f64;
            Cx::new(
                T::lit((2.0 * std::f64::consts::PI * turns).cos()),
                T::lit((2.0 * std::f64::consts::PI * turns).sin()),
            )
        });
        let stacked = DMatrix::from_fn(n_rb, rows * cols, |n, j| h.per_rb[n][(j % rows, j / rows)]);
        let td = kernel * stacked;
        for (k, row) in td.row_iter().enumerate() {
            taps[k] = row.iter().map(|z| abs2(*z)).fold(T::zero(), |a, x| a + x);
        }
    }
    let mut out = vec![T::zero(); bins];
    for (k, p) in taps.into_iter().enumerate() {
        out[k * bins / n_rb.max(1)] += p;
    }
    normalize_or_flat(out)
}

/// `σ1² / (σ1² + σ2²)` of the RB-stacked channel. A zero channel gives 1.
pub fn rank_power_ratio<T: Real>(h: &ChannelRealization<T>) -> T {
    let p = h.n_ports();
    let mut gram = DMatrix::from_element(p, p, czero::<T>());
    for hn in &h.per_rb {
        gram += hn.adjoint() * hn;
    }
    let mut eig: Vec<T> = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|x| x.max(T::zero()))
        .collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let s1 = eig.first().copied().unwrap_or(T::zero());
    let s2 = eig.get(1).copied().unwrap_or(T::zero());
    if s1 + s2 <= T::zero() {
        T::one()
    } else {
        (s1 / (s1 + s2)).max(T::lit(0.5)).min(T::one())
    }
}

/// Per beam row, the fraction of the `M` basis positions holding a
/// nonzero coefficient, averaged over layers.
pub fn bitmap_density<T: Real>(pmi: &ETypeIIPmi, config: &CodebookConfig) -> Vec<T> {
    let rows = 2 * config.l_beams;
    let m = pmi.basis_set.len().max(1);
    let mut counts = vec![0usize; rows];
    for layer in &pmi.layers {
        for c in &layer.coeffs {
            if c.row < rows {
                counts[c.row] += 1;
            }
        }
    }
    let denom = T::from_usize_lossy(m * pmi.layers.len().max(1));
    counts
        .into_iter()
        .map(|c| T::from_usize_lossy(c) / denom)
        .collect()
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Concatenates every indicator for one CSI-RS period.
#[allow(clippy::too_many_arguments)]
pub fn assemble<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    schema: &IndicatorSchema,
    pmi2: &ETypeIIPmi,
    link1: &LinkMetrics<T>,
    link2: &LinkMetrics<T>,
    velocity_mps: f64,
    snr_db: f64,
) -> Result<IndicatorVector<T>> {
    let config = grid.config();
    if schema.bitmap_len != 2 * config.l_beams {
        return Err(Error::SchemaMismatch(format!(
            "schema expects {} bitmap entries, codebook has {}",
            schema.bitmap_len,
            2 * config.l_beams
        )));
    }
    let mut values = Vec::with_capacity(schema.total_dim());
    values.extend(angle_power_spectrum(h, grid, schema.aps_bins));
    values.extend(delay_power_spectrum(h, schema.dps_bins));
    values.push(rank_power_ratio(h));
    values.push(T::lit(clip01(velocity_mps / VELOCITY_SCALE_MPS)));
    values.push(T::lit(clip01((snr_db - SNR_FLOOR_DB) / SNR_SPAN_DB)));
    values.push(T::lit(link1.cqi as f64 / 15.0));
    values.push(T::lit(link2.cqi as f64 / 15.0));
    values.extend(bitmap_density::<T>(pmi2, config));
    debug_assert_eq!(values.len(), schema.total_dim());
    Ok(IndicatorVector { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TxArray;
    use crate::codebook::{build_beam_grid, Coefficient, ETypeIILayer};

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn schema_dimension() {
        let s = IndicatorSchema::for_config(&CodebookConfig::reference());
        assert_eq!(s.total_dim(), 45);
        assert_eq!(s.names().len(), 45);
    }

    #[test]
    fn zero_channel_spectra_are_flat() {
        let cfg = CodebookConfig::reference();
        let grid = build_beam_grid::<f64>(&cfg).unwrap();
        let h = ChannelRealization::from_matrices(
            vec![DMatrix::zeros(2, 32); 4],
            TxArray { n1: 2, n2: 8 },
        );
        for v in angle_power_spectrum(&h, &grid, 16).into_iter().chain(delay_power_spectrum(&h, 16)) {
            assert!((v - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_beam_channel_fills_one_bin() {
        let cfg = CodebookConfig::reference();
        let grid = build_beam_grid::<f64>(&cfg).unwrap();
        let col = grid.orthogonal_col_index(5, (0, 0));
        let beam = grid.columns().column(col);
        let h = DMatrix::from_fn(2, 32, |u, p| {
            if p < 16 {
                beam[p].conj() * c(1.0 + u as f64, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let h = ChannelRealization::from_matrices(vec![h; 3], TxArray { n1: 2, n2: 8 });
        let aps = angle_power_spectrum(&h, &grid, 16);
        assert!(aps[5] >= 0.99);
        // direct inner product oracle
        let direct: f64 = (0..16).map(|p| (beam[p].conj() * beam[p]).re).sum();
        assert!((direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_channel_single_tap() {
        let h = DMatrix::from_fn(2, 4, |u, p| c(u as f64 + 1.0, p as f64 * 0.3));
        let h = ChannelRealization::from_matrices(vec![h; 20], TxArray { n1: 1, n2: 2 });
        let dps = delay_power_spectrum(&h, 16);
        assert!(dps[0] >= 0.99);
    }

    #[test]
    fn two_resolvable_taps_split_power() {
        let n_rb = 32;
        let per_rb = (0..n_rb)
            .map(|n| {
                // taps at delay bins 0 and 16 (bins 0 and 8 after folding)
                let phase = -2.0 * std::f64::consts::PI * (n * 16) as f64 / n_rb as f64;
                DMatrix::from_element(1, 2, c(1.0, 0.0) + Cx::from_polar(1.0, phase))
            })
            .collect();
        let h = ChannelRealization::from_matrices(per_rb, TxArray { n1: 1, n2: 1 });
        let dps = delay_power_spectrum(&h, 16);
        assert!((dps[0] - 0.5).abs() < 0.05);
        assert!((dps[8] - 0.5).abs() < 0.05);
    }

    #[test]
    fn rank_ratio_extremes() {
        let tx = TxArray { n1: 1, n2: 1 };
        let r1 = ChannelRealization::from_matrices(
            vec![DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)])],
            tx,
        );
        assert!((rank_power_ratio(&r1) - 1.0).abs() < 1e-12);
        let eye = ChannelRealization::from_matrices(vec![DMatrix::<Cx<f64>>::identity(2, 2)], tx);
        assert!((rank_power_ratio(&eye) - 0.5).abs() < 1e-12);
    }

    fn pmi_with(coeffs: Vec<Coefficient>, m: usize) -> ETypeIIPmi {
        ETypeIIPmi {
            beam_set: vec![0, 1, 2, 3],
            rotation: (0, 0),
            basis_set: (0..m).collect(),
            layers: vec![ETypeIILayer {
                strongest_row: 0,
                coeffs,
            }],
            rank: 1,
        }
    }

    #[test]
    fn bitmap_density_cases() {
        let cfg = CodebookConfig::reference();
        let one_row = pmi_with(
            (0..7).map(|col| Coefficient { row: 2, col, amp: 0, phase: 0 }).collect(),
            7,
        );
        let d: Vec<f64> = bitmap_density(&one_row, &cfg);
        assert_eq!(d[2], 1.0);
        assert_eq!(d.iter().sum::<f64>(), 1.0);
        let full = pmi_with(
            (0..8)
                .flat_map(|row| (0..7).map(move |col| Coefficient { row, col, amp: 0, phase: 0 }))
                .collect(),
            7,
        );
        assert!(bitmap_density::<f64>(&full, &cfg).iter().all(|&x| x == 1.0));
    }

    #[test]
    fn scalar_normalization_and_schema_check() {
        let cfg = CodebookConfig::reference();
        let grid = build_beam_grid::<f64>(&cfg).unwrap();
        let h = ChannelRealization::from_matrices(
            vec![DMatrix::from_element(2, 32, c(0.1, 0.2)); 4],
            TxArray { n1: 2, n2: 8 },
        );
        let m = LinkMetrics {
            sinr: vec![vec![1.0]; 4],
            se: 4.0,
            cqi: 15,
            noise_var: 1.0,
        };
        let pmi = pmi_with(vec![], 7);
        let schema = IndicatorSchema::for_config(&cfg);
        let v = assemble(&h, &grid, &schema, &pmi, &m, &m, 0.0, 50.0).unwrap();
        assert_eq!(v.len(), 45);
        assert_eq!(v.values[33], 0.0);
        assert_eq!(v.values[34], 1.0);
        assert_eq!(v.values[35], 1.0);
        let bad = IndicatorSchema {
            bitmap_len: 6,
            ..schema
        };
        assert!(matches!(
            assemble(&h, &grid, &bad, &pmi, &m, &m, 0.0, 50.0),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn flatten_round_trip() {
        let s = LabeledSample {
            sequence: vec![
                IndicatorVector { values: vec![1.0, 2.0] },
                IndicatorVector { values: vec![3.0, 4.0] },
            ],
            label: CodebookChoice::ETypeII,
        };
        let flat = s.flatten();
        assert_eq!(flat, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(LabeledSample::from_flat(&flat, 2, s.label).unwrap(), s);
        assert_eq!(s.time_average(), vec![2.0, 3.0]);
    }
}
