//! PMI search, PDSCH precoder composition, MMSE-IRC equalization, per-stream
//! SINR and spectral efficiency.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::codebook::{
    build_etype2_precoder, build_type1_precoder, k_nz_per_layer, quantize_layer, CodebookKind,
    DftBeamGrid, ETypeIIPmi, Pmi, TypeIPmi,
};
use crate::error::{Error, Result};
use crate::scalar::{abs2, cis_f64, czero, Cx, Real};

/// PDSCH precoders `F^n` for every RB.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet<T: Real> {
    pub per_rb: Vec<DMatrix<Cx<T>>>,
    pub rank: usize,
    pub source: CodebookKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics<T: Real> {
    /// Linear SINR, indexed `[rb][stream]`.
    pub sinr: Vec<Vec<T>>,
    /// `Σ_r Σ_n log2(1 + SINR_r^n)`.
    pub se: T,
    pub cqi: u8,
    pub noise_var: T,
}

impl<T: Real> LinkMetrics<T> {
    pub fn rank(&self) -> usize {
        self.sinr.first().map_or(0, |s| s.len())
    }

    /// Per-stream SINR whose capacity equals the mean per-stream SE.
    pub fn effective_sinr_db(&self) -> f64 {
        let streams = (self.sinr.len() * self.rank()).max(1) as f64;
        let lin = (self.se.as_f64() / streams).exp2() - 1.0;
        10.0 * lin.max(1e-30).log10()
    }
}

/// Subband of RB `n` when `n_rb` RBs are split evenly into `n_subbands`.
pub fn subband_of(n: usize, n_rb: usize, n_subbands: usize) -> usize {
    n * n_subbands / n_rb.max(1)
}

/// CSI-RS precoder `W^csi`: identity (non-precoded CSI-RS).
pub fn csi_rs_precoder<T: Real>(n_ports: usize) -> DMatrix<Cx<T>> {
    DMatrix::identity(n_ports, n_ports)
}

/// `F = W^csi · W`, with each column rescaled back to the power of the
/// corresponding column of `W` (a no-op for the identity default).
pub fn compose_precoder<T: Real>(csi: &DMatrix<Cx<T>>, w: &DMatrix<Cx<T>>) -> DMatrix<Cx<T>> {
    let mut f = csi * w;
    for (mut fc, wc) in f.column_iter_mut().zip(w.column_iter()) {
        let pf: T = fc.iter().map(|z| abs2(*z)).fold(T::zero(), |a, b| a + b);
        let pw: T = wc.iter().map(|z| abs2(*z)).fold(T::zero(), |a, b| a + b);
        if pf > T::zero() {
            let s = (pw / pf).sqrt();
            fc.iter_mut().for_each(|z| *z *= s);
        }
    }
    f
}

/// Expands a PMI into per-RB PDSCH precoders under identity `W^csi`.
pub fn precoder_set<T: Real>(pmi: &Pmi, grid: &DftBeamGrid<T>, n_rb: usize) -> Result<PrecoderSet<T>> {
    let n_sb = grid.config().n_subbands;
    let per_subband: Vec<DMatrix<Cx<T>>> = match pmi {
        Pmi::TypeI(p) => (0..n_sb)
            .map(|sb| build_type1_precoder(p, grid, sb))
            .collect::<Result<_>>()?,
        Pmi::ETypeII(p) => build_etype2_precoder(p, grid)?.per_subband,
    };
    let per_rb = (0..n_rb)
        .map(|n| per_subband[subband_of(n, n_rb, n_sb)].clone())
        .collect();
    Ok(PrecoderSet {
        per_rb,
        rank: pmi.rank(),
        source: pmi.kind(),
    })
}

/// MMSE-IRC receiver `G = H_eff^H (H_eff H_eff^H + σ² I)^{-1}` (`rank × n_ue`).
pub fn mmse_irc_equalizer<T: Real>(h_eff: &DMatrix<Cx<T>>, noise_var: T) -> DMatrix<Cx<T>> {
    let n_ue = h_eff.nrows();
    let mut cov = h_eff * h_eff.adjoint();
    for i in 0..n_ue {
        cov[(i, i)] += Cx::new(noise_var, T::zero());
    }
    let inv = match cov.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => cov.try_inverse().expect("regularized covariance is invertible"),
    };
    h_eff.adjoint() * inv
}

/// Per-stream SINR of stream `stream` with equalizer row `g_row`:
/// `|g H f_r|² / (Σ_{j≠r} |g H f_j|² + ||g||² σ²)`.
pub fn sinr<T: Real>(
    g_row: &[Cx<T>],
    h: &DMatrix<Cx<T>>,
    f: &DMatrix<Cx<T>>,
    stream: usize,
    noise_var: T,
) -> T {
    let gh: Vec<Cx<T>> = (0..h.ncols())
        .map(|p| {
            g_row
                .iter()
                .enumerate()
                .fold(czero(), |acc, (u, g)| acc + *g * h[(u, p)])
        })
        .collect();
    let mut signal = T::zero();
    let mut interference = T::zero();
    for j in 0..f.ncols() {
        let v = gh
            .iter()
            .enumerate()
            .fold(czero::<T>(), |acc, (p, x)| acc + *x * f[(p, j)]);
        if j == stream {
            signal = abs2(v);
        } else {
            interference += abs2(v);
        }
    }
    let g_norm2 = g_row.iter().map(|z| abs2(*z)).fold(T::zero(), |a, b| a + b);
    let denom = interference + g_norm2 * noise_var;
    if signal <= T::zero() || denom <= T::zero() {
        T::zero()
    } else {
        signal / denom
    }
}

/// Maps a mean SINR (dB) to a 4-bit CQI: 16 thresholds from -6 dB to
/// +24 dB in 2 dB steps; the index is the number passed minus one.
pub fn cqi_from_sinr(mean_sinr_db: f64) -> u8 {
    let passed = (0..16)
        .filter(|&i| mean_sinr_db >= -6.0 + 2.0 * i as f64)
        .count();
    passed.saturating_sub(1) as u8
}

/// η_SE of `precoders` on `h` with MMSE-IRC reception.
pub fn spectral_efficiency<T: Real>(
    h: &ChannelRealization<T>,
    precoders: &PrecoderSet<T>,
    noise_var: T,
) -> Result<LinkMetrics<T>> {
    if precoders.per_rb.len() != h.n_rb() {
        return Err(Error::DimensionMismatch(format!(
            "{} precoders for {} RBs",
            precoders.per_rb.len(),
            h.n_rb()
        )));
    }
    let mut sinrs = Vec::with_capacity(h.n_rb());
    let mut se = T::zero();
    for (hn, f) in h.per_rb.iter().zip(&precoders.per_rb) {
        let h_eff = hn * f;
        let g = mmse_irc_equalizer(&h_eff, noise_var);
        let row: Vec<T> = (0..f.ncols())
            .map(|r| {
                let g_row: Vec<Cx<T>> = g.row(r).iter().copied().collect();
                sinr(&g_row, hn, f, r, noise_var)
            })
            .collect();
        for s in &row {
            se += (T::one() + *s).log2();
        }
        sinrs.push(row);
    }
    let mut metrics = LinkMetrics {
        sinr: sinrs,
        se,
        cqi: 0,
        noise_var,
    };
    metrics.cqi = cqi_from_sinr(metrics.effective_sinr_db());
    Ok(metrics)
}

/// η_SE realized on `h_now` with a PMI measured on an earlier realization.
pub fn mismatched_se<T: Real>(
    h_now: &ChannelRealization<T>,
    stale_pmi: &Pmi,
    grid: &DftBeamGrid<T>,
    noise_var: T,
) -> Result<LinkMetrics<T>> {
    let set = precoder_set(stale_pmi, grid, h_now.n_rb())?;
    spectral_efficiency(h_now, &set, noise_var)
}

/// Projections `H^n_d · b` of every RB and polarization onto every grid beam.
#[derive(Debug, Clone)]
pub struct BeamProjection<T: Real> {
    /// `[rb][pol]`, each `n_ue × n_grid_columns`.
    pub per_rb: Vec<[DMatrix<Cx<T>>; 2]>,
}

impl<T: Real> BeamProjection<T> {
    pub fn new(h: &ChannelRealization<T>, grid: &DftBeamGrid<T>) -> Self {
        let ne = grid.config().n_elements();
        let per_rb = h
            .per_rb
            .iter()
            .map(|hn| {
                [
                    hn.columns(0, ne) * grid.columns(),
                    hn.columns(ne, ne) * grid.columns(),
                ]
            })
            .collect();
        BeamProjection { per_rb }
    }

    /// `Σ_n Σ_d ||H^n_d b_col||²` for every grid column.
    pub fn column_power(&self) -> Vec<T> {
        let ncols = self.per_rb.first().map_or(0, |p| p[0].ncols());
        let mut out = vec![T::zero(); ncols];
        for pols in &self.per_rb {
            for p in pols {
                for (c, col) in p.column_iter().enumerate() {
                    out[c] += col.iter().map(|z| abs2(*z)).fold(T::zero(), |a, b| a + b);
                }
            }
        }
        out
    }
}

const MAX_RANK: usize = 4;

/// Per-stream MMSE SINRs of an effective channel given by its columns,
/// via `SINR_l = 1/[(I + E^H E/σ²)^{-1}]_{ll} - 1`, which equals the
/// Eq.-form SINR of the MMSE-IRC receiver.
fn mmse_stream_sinrs<T: Real>(cols: &[&[Cx<T>]], noise_var: T, out: &mut [T]) {
    let r = cols.len();
    let inv_noise = T::one() / noise_var;
    if r == 1 {
        let p = cols[0].iter().map(|z| abs2(*z)).fold(T::zero(), |a, b| a + b);
        out[0] = p * inv_noise;
        return;
    }
    let mut a = [[czero::<T>(); MAX_RANK]; MAX_RANK];
    for i in 0..r {
        for j in i..r {
            let dot = cols[i]
                .iter()
                .zip(cols[j].iter())
                .fold(czero::<T>(), |acc, (x, y)| acc + x.conj() * *y);
            a[i][j] = dot * inv_noise;
            a[j][i] = a[i][j].conj();
        }
        a[i][i] += Cx::new(T::one(), T::zero());
    }
    let diag = hermitian_inverse_diag(&mut a, r);
    for l in 0..r {
        let d = diag[l];
        out[l] = if d > T::zero() {
            (T::one() / d - T::one()).max(T::zero())
        } else {
            T::zero()
        };
    }
}

/// Diagonal of the inverse of a Hermitian positive-definite matrix (r <= 4),
/// through an in-place Cholesky factor.
fn hermitian_inverse_diag<T: Real>(a: &mut [[Cx<T>; MAX_RANK]; MAX_RANK], r: usize) -> [T; MAX_RANK] {
    // A = L L^H, L lower triangular with real diagonal
    let mut l = [[czero::<T>(); MAX_RANK]; MAX_RANK];
    for j in 0..r {
        let mut d = a[j][j].re;
        for k in 0..j {
            d -= abs2(l[j][k]);
        }
        let d = d.max(T::lit(1e-300_f64.max(f64::MIN_POSITIVE))).sqrt();
        l[j][j] = Cx::new(d, T::zero());
        for i in j + 1..r {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / d;
        }
    }
    // diag(A^{-1})_i = Σ_k |(L^{-1})_{k,i}|²
    let mut out = [T::zero(); MAX_RANK];
    let mut inv = [[czero::<T>(); MAX_RANK]; MAX_RANK];
    for c in 0..r {
        for i in c..r {
            let mut s = if i == c { Cx::new(T::one(), T::zero()) } else { czero() };
            for k in c..i {
                s -= l[i][k] * inv[k][c];
            }
            inv[i][c] = s / l[i][i].re;
        }
    }
    for i in 0..r {
        for k in i..r {
            out[i] += abs2(inv[k][i]);
        }
    }
    out
}

fn subband_rbs(n_rb: usize, n_sb: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_sb];
    for n in 0..n_rb {
        out[subband_of(n, n_rb, n_sb)].push(n);
    }
    out
}

fn max_search_rank<T: Real>(h: &ChannelRealization<T>, grid: &DftBeamGrid<T>) -> usize {
    grid.config().max_rank.min(h.n_ue.max(1)).min(MAX_RANK)
}

/// Exhaustive Type I search: every wideband beam pair and, per subband,
/// every co-phase index, for each rank. Ties resolve to the lower rank,
/// then lower `i11`, then lower `i12`, then lower co-phase index.
pub fn select_type1_pmi<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    noise_var: T,
) -> Result<(TypeIPmi, LinkMetrics<T>)> {
    let proj = BeamProjection::new(h, grid);
    select_type1_pmi_with(h, grid, &proj, noise_var)
}

/// [`select_type1_pmi`] reusing precomputed beam projections.
pub fn select_type1_pmi_with<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    proj: &BeamProjection<T>,
    noise_var: T,
) -> Result<(TypeIPmi, LinkMetrics<T>)> {
    let config = grid.config();
    let n_sb = config.n_subbands;
    let rbs = subband_rbs(h.n_rb(), n_sb);
    let n_ue = h.n_ue;
    let (e1, e2) = (grid.extent1(), grid.extent2());

    let mut best: Option<(T, TypeIPmi)> = None;
    let mut cols_buf = vec![czero::<T>(); MAX_RANK * n_ue];
    let mut sinr_buf = [T::zero(); MAX_RANK];
    for rank in 1..=max_search_rank(h, grid) {
        let scale = T::lit(1.0 / ((2 * rank) as f64).sqrt());
        let options: &[u8] = if rank == 1 { &[0, 1, 2, 3] } else { &[0, 2] };
        for i11 in 0..e1 {
            for i12 in 0..e2 {
                let mut pmi = TypeIPmi {
                    i11,
                    i12,
                    offset_sel: 0,
                    cophase: vec![0; n_sb],
                    rank,
                };
                let beams: Vec<usize> = (0..rank)
                    .map(|l| {
                        let (b1, b2) = pmi.layer_beam(l, config);
                        grid.col_index(b1, b2)
                    })
                    .collect();
                let mut total = T::zero();
                for (sb, sb_rbs) in rbs.iter().enumerate() {
                    let mut best_c = 0u8;
                    let mut best_val: Option<T> = None;
                    for &c in options {
                        pmi.cophase[sb] = c;
                        let mut val = T::zero();
                        for &n in sb_rbs {
                            let [p0, p1] = &proj.per_rb[n];
                            for (l, &col) in beams.iter().enumerate() {
                                let phi = pmi.cophase_factor::<T>(sb, l);
                                for u in 0..n_ue {
                                    cols_buf[l * n_ue + u] =
                                        (p0[(u, col)] + phi * p1[(u, col)]) * scale;
                                }
                            }
                            let cols: Vec<&[Cx<T>]> =
                                cols_buf[..rank * n_ue].chunks(n_ue).collect();
                            mmse_stream_sinrs(&cols, noise_var, &mut sinr_buf);
                            for s in &sinr_buf[..rank] {
                                val += (T::one() + *s).log2();
                            }
                        }
                        if best_val.map_or(true, |b| val > b) {
                            best_val = Some(val);
                            best_c = c;
                        }
                    }
                    pmi.cophase[sb] = best_c;
                    total += best_val.unwrap_or(T::zero());
                }
                if best.as_ref().map_or(true, |(b, _)| total > *b) {
                    best = Some((total, pmi));
                }
            }
        }
    }
    let (_, pmi) = best.expect("at least one hypothesis");
    let set = precoder_set(&Pmi::TypeI(pmi.clone()), grid, h.n_rb())?;
    let metrics = spectral_efficiency(h, &set, noise_var)?;
    Ok((pmi, metrics))
}

/// Orthogonal beam group maximizing projected power: the rotation whose
/// L strongest orthogonal beams carry the most power (ties to the lower
/// rotation index and lower beam index).
pub fn select_beam_group<T: Real>(
    grid: &DftBeamGrid<T>,
    column_power: &[T],
) -> ((usize, usize), Vec<usize>) {
    let config = grid.config();
    let mut best: Option<(T, (usize, usize), Vec<usize>)> = None;
    for q1 in 0..config.o1 {
        for q2 in 0..config.o2 {
            let mut beams: Vec<(usize, T)> = (0..config.n_elements())
                .map(|b| (b, column_power[grid.orthogonal_col_index(b, (q1, q2))]))
                .collect();
            beams.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
            let chosen = &beams[..config.l_beams.min(beams.len())];
            let total = chosen.iter().fold(T::zero(), |acc, (_, p)| acc + *p);
            if best.as_ref().map_or(true, |(b, _, _)| total > *b) {
                let mut set: Vec<usize> = chosen.iter().map(|(b, _)| *b).collect();
                set.sort_unstable();
                best = Some((total, (q1, q2), set));
            }
        }
    }
    let (_, rot, set) = best.expect("non-empty grid");
    (rot, set)
}

/// Per-subband layer targets projected on the `2L` beam space: `[layer][subband]`.
fn layer_projections<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    beams: &DMatrix<Cx<T>>,
    n_layers: usize,
) -> Vec<Vec<DVector<Cx<T>>>> {
    let config = grid.config();
    let ne = config.n_elements();
    let l = beams.ncols();
    let n_sb = config.n_subbands;
    let rbs = subband_rbs(h.n_rb(), n_sb);
    let mut out = vec![vec![DVector::from_element(2 * l, czero()); n_sb]; n_layers];
    for (sb, sb_rbs) in rbs.iter().enumerate() {
        if sb_rbs.is_empty() {
            continue;
        }
        let rows = sb_rbs.len() * h.n_ue;
        let stacked = DMatrix::from_fn(rows, h.n_ports(), |r, p| {
            h.per_rb[sb_rbs[r / h.n_ue]][(r % h.n_ue, p)]
        });
        // right singular vectors through the small Gram matrix
        let gram = &stacked * stacked.adjoint();
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for (layer, &idx) in order.iter().take(n_layers).enumerate() {
            let lambda = eig.eigenvalues[idx];
            if lambda <= T::lit(1e-30) {
                continue;
            }
            let s = lambda.sqrt();
            let v = (stacked.adjoint() * eig.eigenvectors.column(idx)).map(|z| z / s);
            let y0 = beams.adjoint() * v.rows(0, ne);
            let y1 = beams.adjoint() * v.rows(ne, ne);
            let target = &mut out[layer][sb];
            target.rows_mut(0, l).copy_from(&y0);
            target.rows_mut(l, l).copy_from(&y1);
        }
    }
    // common phase reference: strongest beam row over all subbands
    for layer in out.iter_mut() {
        let mut row_power = vec![T::zero(); 2 * l];
        for y in layer.iter() {
            for (i, z) in y.iter().enumerate() {
                row_power[i] += abs2(*z);
            }
        }
        let reference = (0..2 * l).fold(0, |best, i| if row_power[i] > row_power[best] { i } else { best });
        for y in layer.iter_mut() {
            let z = y[reference];
            let mag = abs2(z).sqrt();
            if mag > T::zero() {
                let rot = z.conj() / mag;
                y.iter_mut().for_each(|x| *x *= rot);
            }
        }
    }
    out
}

/// EType II search: beam group by projected power, per-subband layer
/// targets compressed onto the strongest shared frequency bases, sparse
/// quantized coefficients, and the rank maximizing η_SE of the
/// reconstructed precoder (ties to the lower rank).
pub fn select_etype2_pmi<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    noise_var: T,
) -> Result<(ETypeIIPmi, LinkMetrics<T>)> {
    let proj = BeamProjection::new(h, grid);
    select_etype2_pmi_with(h, grid, &proj, noise_var)
}

/// [`select_etype2_pmi`] reusing precomputed beam projections.
pub fn select_etype2_pmi_with<T: Real>(
    h: &ChannelRealization<T>,
    grid: &DftBeamGrid<T>,
    proj: &BeamProjection<T>,
    noise_var: T,
) -> Result<(ETypeIIPmi, LinkMetrics<T>)> {
    let config = grid.config();
    config.validate_etype2()?;
    let n_sb = config.n_subbands;
    let (rotation, beam_set) = select_beam_group(grid, &proj.column_power());
    let cols: Vec<usize> = beam_set
        .iter()
        .map(|&b| grid.orthogonal_col_index(b, rotation))
        .collect();
    let beams = grid.columns().select_columns(&cols);
    let max_rank = max_search_rank(h, grid);
    let targets = layer_projections(h, grid, &beams, max_rank);

    // subband → frequency-basis transform of every layer target (2L × N_SB)
    let inv_n = T::lit(1.0 / n_sb as f64);
    let spectra: Vec<DMatrix<Cx<T>>> = targets
        .iter()
        .map(|layer| {
            let rows = layer[0].len();
            DMatrix::from_fn(rows, n_sb, |i, k| {
                (0..n_sb).fold(czero::<T>(), |acc, sb| {
                    let turns = ((k * sb) % n_sb) as f64 / n_sb as f64;
                    acc + layer[sb][i] * cis_f64::<T>(-2.0 * PI * turns)
                }) * inv_n
            })
        })
        .collect();

    let mut best: Option<(T, ETypeIIPmi, LinkMetrics<T>)> = None;
    for rank in 1..=max_rank {
        let m = config.m_bases(rank);
        let mut energy: Vec<(usize, T)> = (0..n_sb)
            .map(|k| {
                let e = spectra[..rank].iter().fold(T::zero(), |acc, s| {
                    acc + s.column(k).iter().map(|z| abs2(*z)).fold(T::zero(), |a, b| a + b)
                });
                (k, e)
            })
            .collect();
        energy.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        let mut basis_set: Vec<usize> = energy[..m].iter().map(|(k, _)| *k).collect();
        basis_set.sort_unstable();
        let k_nz = k_nz_per_layer(config, rank);
        let layers = spectra[..rank]
            .iter()
            .map(|s| quantize_layer(&s.select_columns(&basis_set), k_nz, config))
            .collect();
        let pmi = ETypeIIPmi {
            beam_set: beam_set.clone(),
            rotation,
            basis_set,
            layers,
            rank,
        };
        let set = precoder_set(&Pmi::ETypeII(pmi.clone()), grid, h.n_rb())?;
        let metrics = spectral_efficiency(h, &set, noise_var)?;
        if best.as_ref().map_or(true, |(b, _, _)| metrics.se > *b) {
            best = Some((metrics.se, pmi, metrics));
        }
    }
    let (_, pmi, metrics) = best.expect("max_rank >= 1");
    Ok((pmi, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TxArray;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn mmse_identity_unit_noise_is_half_identity() {
        let g = mmse_irc_equalizer(&DMatrix::<Cx<f64>>::identity(2, 2), 1.0);
        for i in 0..2 {
            for j in 0..2 {
                let t = if i == j { 0.5 } else { 0.0 };
                assert!((g[(i, j)] - c(t, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn mmse_scalar_closed_form() {
        let g = mmse_irc_equalizer(&DMatrix::from_element(1, 1, c(2.0, 0.0)), 1.0);
        assert!((g[(0, 0)] - c(0.4, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mmse_approaches_zero_forcing() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.5), c(0.2, -0.1), c(-0.3, 0.0), c(0.9, 0.4)]);
        let g = mmse_irc_equalizer(&h, 1e-12);
        let gh = &g * &h;
        for i in 0..2 {
            for j in 0..2 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((gh[(i, j)] - c(t, 0.0)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn scalar_sinr_without_interference() {
        let one = DMatrix::from_element(1, 1, c(1.0, 0.0));
        assert!((sinr(&[c(1.0, 0.0)], &one, &one, 0, 0.1) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn identity_two_stream_sinr() {
        let eye = DMatrix::<Cx<f64>>::identity(2, 2);
        let s = sinr(&[c(1.0, 0.0), c(0.0, 0.0)], &eye, &eye, 0, 0.5);
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interference_term_enters_denominator() {
        let eye = DMatrix::<Cx<f64>>::identity(2, 2);
        let r = 1.0 / 2f64.sqrt();
        let f = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(r, 0.0), c(0.0, 0.0), c(r, 0.0)]);
        let s = sinr(&[c(1.0, 0.0), c(0.0, 0.0)], &eye, &f, 0, 0.5);
        // brute force: signal |F11|² = 1, interference |F12|² = 1/2, noise 0.5
        assert!((s - 1.0 / (0.5 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn cqi_staircase() {
        assert_eq!(cqi_from_sinr(-10.0), 0);
        assert_eq!(cqi_from_sinr(30.0), 15);
        assert_eq!(cqi_from_sinr(0.0), 3);
        let mut last = 0;
        for i in -200..400 {
            let q = cqi_from_sinr(i as f64 * 0.1);
            assert!(q >= last);
            last = q;
        }
    }

    #[test]
    fn csi_identity_composition() {
        let eye = csi_rs_precoder::<f64>(4);
        assert_eq!(eye, DMatrix::identity(4, 4));
        let w = DMatrix::from_fn(4, 2, |i, j| c(i as f64 - 1.0, j as f64 + 0.5));
        assert_eq!(compose_precoder(&eye, &w), w);
    }

    #[test]
    fn dft_csi_override_keeps_column_power() {
        let n = 4;
        let dft = DMatrix::from_fn(n, n, |i, k| {
            cis_f64::<f64>(2.0 * PI * (i * k) as f64 / n as f64) / (n as f64).sqrt()
        });
        let w = DMatrix::from_fn(n, 2, |i, j| c((i + j) as f64, 1.0 - i as f64) * 0.1);
        let f = compose_precoder(&dft, &w);
        for j in 0..2 {
            let pw: f64 = w.column(j).iter().map(|z| z.norm_sqr()).sum();
            let pf: f64 = f.column(j).iter().map(|z| z.norm_sqr()).sum();
            assert!((pw - pf).abs() < 1e-12);
        }
    }

    fn flat_set(rank: usize, value: f64, n_rb: usize) -> (ChannelRealization<f64>, PrecoderSet<f64>) {
        let tx = TxArray { n1: 1, n2: 1 };
        let h = DMatrix::from_fn(rank, 2, |i, j| if i == j { c(value, 0.0) } else { c(0.0, 0.0) });
        let f = DMatrix::from_fn(2, rank, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        (
            ChannelRealization::from_matrices(vec![h; n_rb], tx),
            PrecoderSet {
                per_rb: vec![f; n_rb],
                rank,
                source: CodebookKind::TypeI,
            },
        )
    }

    #[test]
    fn unit_sinr_gives_one_bit() {
        let (h, f) = flat_set(1, 1.0, 1);
        let m = spectral_efficiency(&h, &f, 1.0).unwrap();
        assert!((m.se - 1.0).abs() < 1e-12);
    }

    #[test]
    fn se_is_additive_over_rbs() {
        let (h1, f1) = flat_set(2, 1.3, 1);
        let (h2, f2) = flat_set(2, 1.3, 2);
        let a = spectral_efficiency(&h1, &f1, 0.7).unwrap().se;
        let b = spectral_efficiency(&h2, &f2, 0.7).unwrap().se;
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn zero_channel_has_zero_se() {
        let (h, f) = flat_set(2, 0.0, 3);
        let m = spectral_efficiency(&h, &f, 0.1).unwrap();
        assert_eq!(m.se, 0.0);
    }

    #[test]
    fn fast_mmse_sinr_matches_equation_form() {
        let h_eff = DMatrix::from_fn(4, 3, |i, j| {
            c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0) * 0.4
        });
        let noise = 0.3;
        let cols: Vec<Vec<Cx<f64>>> = (0..3).map(|j| h_eff.column(j).iter().copied().collect()).collect();
        let refs: Vec<&[Cx<f64>]> = cols.iter().map(|v| v.as_slice()).collect();
        let mut fast = [0.0; MAX_RANK];
        mmse_stream_sinrs(&refs, noise, &mut fast);
        let g = mmse_irc_equalizer(&h_eff, noise);
        let eye = DMatrix::<Cx<f64>>::identity(3, 3);
        for r in 0..3 {
            let row: Vec<Cx<f64>> = g.row(r).iter().copied().collect();
            let slow = sinr(&row, &h_eff, &eye, r, noise);
            assert!((fast[r] - slow).abs() < 1e-9 * slow.max(1.0), "{} vs {}", fast[r], slow);
        }
    }
}
