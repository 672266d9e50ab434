//! Clustered narrowband-per-RB MIMO channel.
//!
//! Each cluster is a single ray with a delay, a power share, departure
//! angles (azimuth on the second array dimension, elevation on the first)
//! and an arrival azimuth at a half-wavelength ULA. The per-RB response is
//! evaluated at the RB-center frequency; time evolution rotates each
//! cluster by its own Doppler shift.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const CARRIER_DL_HZ: f64 = 2.12e9;
/// RB width: 12 subcarriers at 15 kHz.
pub const RB_SPACING_HZ: f64 = 180e3;
pub const SPEED_3_KMH: f64 = 3.0 / 3.6;
pub const SPEED_60_KMH: f64 = 60.0 / 3.6;
pub const DELAY_SPREAD_SHORT_S: f64 = 363e-9;
pub const DELAY_SPREAD_LONG_S: f64 = 8000e-9;

const LOS_K_FACTOR: f64 = 10.0;
const LOS_CLUSTERS: usize = 4;
const LOS_ANGLE_SPREAD_DEG: f64 = 5.0;
const LOS_ELEVATION_SPREAD_DEG: f64 = 2.0;
const NLOS_CLUSTERS: usize = 12;
const NLOS_ANGLE_SPREAD_DEG: f64 = 60.0;
const NLOS_ELEVATION_SPREAD_DEG: f64 = 10.0;
const NLOS_ARRIVAL_SPREAD_DEG: f64 = 90.0;
const MEAN_AZIMUTH_RANGE_DEG: f64 = 50.0;
const MEAN_ELEVATION_RANGE_DEG: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    LosHighCorr,
    NlosRich,
    NlosLongDelay,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 3] = [
        ProfileKind::LosHighCorr,
        ProfileKind::NlosRich,
        ProfileKind::NlosLongDelay,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::LosHighCorr => "los_high_corr",
            ProfileKind::NlosRich => "nlos_rich",
            ProfileKind::NlosLongDelay => "nlos_long_delay",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProfileKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub delay_s: f64,
    /// Linear power share.
    pub power: f64,
    /// Departure azimuth (radians), drives the second array dimension.
    pub aod: f64,
    /// Arrival azimuth (radians) at the UE array.
    pub aoa: f64,
    /// Departure elevation offset (radians), drives the first array dimension.
    pub zod: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub kind: ProfileKind,
    pub clusters: Vec<Cluster>,
    pub k_factor: f64,
    /// RMS delay spread the cluster delays were scaled to.
    pub delay_spread_s: f64,
    pub speed_mps: f64,
    pub carrier_hz: f64,
    pub label: String,
}

impl ChannelProfile {
    /// Maximum Doppler shift `v·f/c` in Hz.
    pub fn max_doppler_hz(&self) -> f64 {
        self.speed_mps * self.carrier_hz / SPEED_OF_LIGHT
    }

    /// Power-weighted RMS delay spread of the clusters.
    pub fn rms_delay_spread(&self) -> f64 {
        rms_delay(&self.clusters)
    }

    /// Profile made of the given clusters, with powers normalized to 1.
    pub fn from_clusters(kind: ProfileKind, mut clusters: Vec<Cluster>, speed_mps: f64) -> Self {
        let total: f64 = clusters.iter().map(|c| c.power).sum();
        if total > 0.0 {
            clusters.iter_mut().for_each(|c| c.power /= total);
        }
        let delay_spread_s = rms_delay(&clusters);
        ChannelProfile {
            kind,
            clusters,
            k_factor: 0.0,
            delay_spread_s,
            speed_mps,
            carrier_hz: CARRIER_DL_HZ,
            label: kind.as_str().to_string(),
        }
    }
}

fn rms_delay(clusters: &[Cluster]) -> f64 {
    let mean: f64 = clusters.iter().map(|c| c.power * c.delay_s).sum();
    let second: f64 = clusters.iter().map(|c| c.power * c.delay_s * c.delay_s).sum();
    (second - mean * mean).max(0.0).sqrt()
}

fn uniform_sym(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    (rng.random::<f64>() * 2.0 - 1.0) * half_width
}

/// Builds one of the preset clustered profiles.
///
/// `los_high_corr`: K = 10, 4 clusters within ±5°. `nlos_rich`: K = 0,
/// 12 clusters within ±60°. `nlos_long_delay`: the `nlos_rich` geometry
/// with its RMS delay spread raised to at least 8000 ns.
pub fn make_profile(
    kind: ProfileKind,
    speed_mps: f64,
    delay_spread_s: f64,
    seed: u64,
) -> Result<ChannelProfile> {
    if !(speed_mps >= 0.0) {
        return Err(Error::InvalidConfig(format!("speed {speed_mps} must be >= 0")));
    }
    if !(delay_spread_s > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "delay spread {delay_spread_s} must be > 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c1a5_7e25_0001);
    let (n, k_factor, az, el, arr, rms) = match kind {
        ProfileKind::LosHighCorr => (
            LOS_CLUSTERS,
            LOS_K_FACTOR,
            LOS_ANGLE_SPREAD_DEG,
            LOS_ELEVATION_SPREAD_DEG,
            LOS_ANGLE_SPREAD_DEG,
            delay_spread_s,
        ),
        ProfileKind::NlosRich => (
            NLOS_CLUSTERS,
            0.0,
            NLOS_ANGLE_SPREAD_DEG,
            NLOS_ELEVATION_SPREAD_DEG,
            NLOS_ARRIVAL_SPREAD_DEG,
            delay_spread_s,
        ),
        ProfileKind::NlosLongDelay => (
            NLOS_CLUSTERS,
            0.0,
            NLOS_ANGLE_SPREAD_DEG,
            NLOS_ELEVATION_SPREAD_DEG,
            NLOS_ARRIVAL_SPREAD_DEG,
            delay_spread_s.max(DELAY_SPREAD_LONG_S),
        ),
    };
    let deg = PI / 180.0;
    let mean_aod = uniform_sym(&mut rng, MEAN_AZIMUTH_RANGE_DEG) * deg;
    let mean_aoa = uniform_sym(&mut rng, MEAN_AZIMUTH_RANGE_DEG) * deg;
    let mean_zod = uniform_sym(&mut rng, MEAN_ELEVATION_RANGE_DEG) * deg;

    // exponential excess delays (unit mean), cluster 0 at delay 0
    let mut delays: Vec<f64> = (0..n)
        .map(|c| if c == 0 { 0.0 } else { -(1.0 - rng.random::<f64>()).ln() })
        .collect();
    delays.sort_by(f64::total_cmp);
    let mut clusters: Vec<Cluster> = delays
        .iter()
        .enumerate()
        .map(|(c, &tau)| {
            let power = (-tau).exp() * (0.5 + rng.random::<f64>());
            let (aod, aoa, zod) = if c == 0 {
                (mean_aod, mean_aoa, mean_zod)
            } else {
                (
                    mean_aod + uniform_sym(&mut rng, az) * deg,
                    mean_aoa + uniform_sym(&mut rng, arr) * deg,
                    mean_zod + uniform_sym(&mut rng, el) * deg,
                )
            };
            Cluster {
                delay_s: tau,
                power,
                aod,
                aoa,
                zod,
            }
        })
        .collect();

    if k_factor > 0.0 && n > 1 {
        let scattered: f64 = clusters[1..].iter().map(|c| c.power).sum();
        clusters[0].power = k_factor / (k_factor + 1.0);
        for c in &mut clusters[1..] {
            c.power *= 1.0 / ((k_factor + 1.0) * scattered);
        }
    } else {
        let total: f64 = clusters.iter().map(|c| c.power).sum();
        clusters.iter_mut().for_each(|c| c.power /= total);
    }

    let raw_rms = rms_delay(&clusters);
    if raw_rms > 0.0 {
        let scale = rms / raw_rms;
        clusters.iter_mut().for_each(|c| c.delay_s *= scale);
    }

    Ok(ChannelProfile {
        kind,
        delay_spread_s: rms_delay(&clusters),
        clusters,
        k_factor,
        speed_mps,
        carrier_hz: CARRIER_DL_HZ,
        label: kind.as_str().to_string(),
    })
}

/// Transmit array: dual-polarized `n1 × n2` planar array, `2·n1·n2` ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TxArray {
    pub n1: usize,
    pub n2: usize,
}

impl TxArray {
    pub fn n_ports(&self) -> usize {
        2 * self.n1 * self.n2
    }
}

/// Per-cluster random state drawn once per seed and reused by [`evolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub initial_phase: Vec<f64>,
    pub doppler_hz: Vec<f64>,
    /// Phase of the second polarization relative to the first.
    pub polarization_phase: Vec<f64>,
}

impl ClusterState {
    pub fn draw(profile: &ChannelProfile, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc1a5_7e25_0000_0002);
        let nu_max = profile.max_doppler_hz();
        let n = profile.clusters.len();
        let mut initial_phase = Vec::with_capacity(n);
        let mut doppler_hz = Vec::with_capacity(n);
        let mut polarization_phase = Vec::with_capacity(n);
        for _ in 0..n {
            initial_phase.push(2.0 * PI * rng.random::<f64>());
            doppler_hz.push(nu_max * (2.0 * PI * rng.random::<f64>()).cos());
            polarization_phase.push(2.0 * PI * rng.random::<f64>());
        }
        ClusterState {
            initial_phase,
            doppler_hz,
            polarization_phase,
        }
    }
}

/// Per-RB channel matrices `H^n` (`n_ue × n_ports`) at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    pub per_rb: Vec<DMatrix<Cx<T>>>,
    pub time_s: f64,
    pub profile_label: String,
    pub tx: TxArray,
    pub n_ue: usize,
    pub cluster_state: Option<ClusterState>,
}

impl<T: Real> ChannelRealization<T> {
    pub fn n_rb(&self) -> usize {
        self.per_rb.len()
    }

    pub fn n_ports(&self) -> usize {
        self.tx.n_ports()
    }

    /// Realization built directly from matrices (no cluster state).
    pub fn from_matrices(per_rb: Vec<DMatrix<Cx<T>>>, tx: TxArray) -> Self {
        let n_ue = per_rb.first().map_or(0, |h| h.nrows());
        ChannelRealization {
            per_rb,
            time_s: 0.0,
            profile_label: "custom".into(),
            tx,
            n_ue,
            cluster_state: None,
        }
    }
}

/// RB-center baseband frequency of RB `n` out of `n_rb`.
pub fn rb_center_hz(n: usize, n_rb: usize) -> f64 {
    (n as f64 - (n_rb as f64 - 1.0) / 2.0) * RB_SPACING_HZ
}

/// Draws cluster state from `seed` and evaluates the channel at `time_s`.
pub fn realize<T: Real>(
    profile: &ChannelProfile,
    n_rb: usize,
    n_ue: usize,
    tx: TxArray,
    time_s: f64,
    seed: u64,
) -> ChannelRealization<T> {
    let state = ClusterState::draw(profile, seed);
    realize_with_state(profile, state, n_rb, n_ue, tx, time_s)
}

/// Evaluates `H^n = Σ_c sqrt(P_c)·g_c(t)·a_rx(aoa_c)·a_tx(c)^H·exp(-j2π f_n τ_c)`.
pub fn realize_with_state<T: Real>(
    profile: &ChannelProfile,
    state: ClusterState,
    n_rb: usize,
    n_ue: usize,
    tx: TxArray,
    time_s: f64,
) -> ChannelRealization<T> {
    let n_ports = tx.n_ports();
    let ne = tx.n1 * tx.n2;
    // (cluster gain at time t, rx response, conj tx response)
    let rays: Vec<(Cx<f64>, Vec<Cx<f64>>, Vec<Cx<f64>>, f64)> = profile
        .clusters
        .iter()
        .enumerate()
        .map(|(c, cl)| {
            let g = Cx::from_polar(
                cl.power.sqrt(),
                state.initial_phase[c] + 2.0 * PI * state.doppler_hz[c] * time_s,
            );
            let rx: Vec<Cx<f64>> = (0..n_ue)
                .map(|u| Cx::from_polar(1.0, PI * u as f64 * cl.aoa.sin()))
                .collect();
            let (u1, u2) = (cl.zod.sin(), cl.aod.sin());
            let pol = Cx::from_polar(1.0, state.polarization_phase[c]);
            let tx_conj: Vec<Cx<f64>> = (0..n_ports)
                .map(|p| {
                    let e = p % ne;
                    let (m, n) = (e / tx.n2, e % tx.n2);
                    let mut a = Cx::from_polar(1.0, PI * (m as f64 * u1 + n as f64 * u2));
                    if p >= ne {
                        a *= pol;
                    }
                    a.conj()
                })
                .collect();
            (g, rx, tx_conj, cl.delay_s)
        })
        .collect();

    let per_rb = (0..n_rb)
        .map(|n| {
            let f = rb_center_hz(n, n_rb);
            let mut h = DMatrix::<Cx<f64>>::zeros(n_ue, n_ports);
            for (g, rx, tx_conj, tau) in &rays {
                let coef = g * Cx::from_polar(1.0, -2.0 * PI * f * tau);
                for (u, ru) in rx.iter().enumerate() {
                    let cu = coef * ru;
                    for (p, tp) in tx_conj.iter().enumerate() {
                        h[(u, p)] += cu * tp;
                    }
                }
            }
            h.map(|z| Cx::new(T::lit(z.re), T::lit(z.im)))
        })
        .collect();

    ChannelRealization {
        per_rb,
        time_s,
        profile_label: profile.label.clone(),
        tx,
        n_ue,
        cluster_state: Some(state),
    }
}

/// Advances a realization by `dt` seconds, reusing its cluster phases and Doppler shifts.
pub fn evolve<T: Real>(
    realization: &ChannelRealization<T>,
    profile: &ChannelProfile,
    dt: f64,
) -> Result<ChannelRealization<T>> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidConfig(format!("dt {dt} must be >= 0")));
    }
    let state = realization
        .cluster_state
        .clone()
        .ok_or(Error::MissingState)?;
    Ok(realize_with_state(
        profile,
        state,
        realization.n_rb(),
        realization.n_ue,
        realization.tx,
        realization.time_s + dt,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TX: TxArray = TxArray { n1: 2, n2: 8 };

    fn max_diff(a: &ChannelRealization<f64>, b: &ChannelRealization<f64>) -> f64 {
        a.per_rb
            .iter()
            .zip(&b.per_rb)
            .map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    #[test]
    fn los_cluster_zero_holds_rician_share() {
        let p = make_profile(ProfileKind::LosHighCorr, 0.0, DELAY_SPREAD_SHORT_S, 3).unwrap();
        assert!((p.clusters[0].power - 10.0 / 11.0).abs() < 1e-12);
        assert_eq!(p.clusters.len(), 4);
    }

    #[test]
    fn powers_sum_to_one_and_delays_hit_target() {
        for kind in ProfileKind::ALL {
            for seed in 0..10 {
                let p = make_profile(kind, SPEED_60_KMH, DELAY_SPREAD_SHORT_S, seed).unwrap();
                let total: f64 = p.clusters.iter().map(|c| c.power).sum();
                assert!((total - 1.0).abs() < 1e-9);
                assert_eq!(p.clusters[0].delay_s, 0.0);
                assert!(p.clusters.iter().all(|c| c.delay_s >= 0.0));
                let target = if kind == ProfileKind::NlosLongDelay {
                    DELAY_SPREAD_LONG_S
                } else {
                    DELAY_SPREAD_SHORT_S
                };
                assert!((p.rms_delay_spread() - target).abs() < 1e-12 * target.max(1.0) + 1e-15);
            }
        }
    }

    #[test]
    fn preset_speeds() {
        assert!((SPEED_3_KMH - 0.833).abs() < 1e-3);
        assert!((SPEED_60_KMH - 16.67).abs() < 1e-2);
    }

    #[test]
    fn unknown_kind_and_bad_inputs() {
        assert!(matches!("cdl_x".parse::<ProfileKind>(), Err(Error::UnknownKind(_))));
        assert!(make_profile(ProfileKind::NlosRich, -1.0, 1e-7, 0).is_err());
        assert!(make_profile(ProfileKind::NlosRich, 1.0, 0.0, 0).is_err());
    }

    fn single_ray(delay_s: f64) -> ChannelProfile {
        ChannelProfile::from_clusters(
            ProfileKind::LosHighCorr,
            vec![Cluster {
                delay_s,
                power: 1.0,
                aod: 0.3,
                aoa: -0.2,
                zod: 0.1,
            }],
            SPEED_60_KMH,
        )
    }

    #[test]
    fn zero_delay_cluster_is_frequency_flat() {
        let h = realize::<f64>(&single_ray(0.0), 8, 4, TX, 0.0, 1);
        for n in 1..8 {
            assert!((&h.per_rb[n] - &h.per_rb[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn single_ray_is_rank_one() {
        let h = realize::<f64>(&single_ray(100e-9), 4, 4, TX, 0.0, 9);
        for m in &h.per_rb {
            let sv = m.clone().singular_values();
            let mut s: Vec<f64> = sv.iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            assert!(s[1] < 1e-9, "second singular value {}", s[1]);
        }
    }

    #[test]
    fn static_channel_does_not_change_over_time() {
        let p = make_profile(ProfileKind::NlosRich, 0.0, DELAY_SPREAD_SHORT_S, 4).unwrap();
        let a = realize::<f64>(&p, 6, 4, TX, 0.0, 5);
        let b = realize::<f64>(&p, 6, 4, TX, 1.0, 5);
        assert!(max_diff(&a, &b) == 0.0);
    }

    #[test]
    fn evolution_is_additive_and_identity_at_zero() {
        let p = make_profile(ProfileKind::NlosRich, SPEED_60_KMH, DELAY_SPREAD_SHORT_S, 4).unwrap();
        let a = realize::<f64>(&p, 6, 4, TX, 0.0, 5);
        assert!(max_diff(&evolve(&a, &p, 0.0).unwrap(), &a) == 0.0);
        let two_step = evolve(&evolve(&a, &p, 0.002).unwrap(), &p, 0.003).unwrap();
        let one_step = evolve(&a, &p, 0.005).unwrap();
        assert!(max_diff(&two_step, &one_step) <= 1e-9);
    }

    #[test]
    fn evolve_needs_state() {
        let h = ChannelRealization::<f64>::from_matrices(vec![DMatrix::zeros(4, 32)], TX);
        let p = single_ray(0.0);
        assert!(matches!(evolve(&h, &p, 0.1), Err(Error::MissingState)));
    }

    #[test]
    fn doppler_decorrelates_within_five_ms() {
        let mut num = Cx::new(0.0, 0.0);
        let mut den = 0.0;
        for seed in 0..20 {
            let p = make_profile(ProfileKind::NlosRich, SPEED_60_KMH, DELAY_SPREAD_SHORT_S, seed).unwrap();
            assert!((p.max_doppler_hz() - 117.8).abs() < 0.1);
            let a = realize::<f64>(&p, 4, 4, TX, 0.0, seed);
            let b = evolve(&a, &p, 0.005).unwrap();
            for (x, y) in a.per_rb.iter().zip(&b.per_rb) {
                num += x.iter().zip(y.iter()).map(|(u, v)| u.conj() * v).sum::<Cx<f64>>();
                den += x.iter().map(|u| u.norm_sqr()).sum::<f64>();
            }
        }
        let rho = num.norm() / den;
        assert!(rho < 0.99, "autocorrelation {rho}");
    }

    #[test]
    fn average_entry_power_is_unit() {
        let mut acc = 0.0;
        let mut count = 0usize;
        for seed in 0..20 {
            let p = make_profile(ProfileKind::NlosRich, SPEED_3_KMH, DELAY_SPREAD_SHORT_S, seed).unwrap();
            let h = realize::<f64>(&p, 8, 4, TX, 0.0, seed + 100);
            for m in &h.per_rb {
                acc += m.iter().map(|z| z.norm_sqr()).sum::<f64>();
                count += m.len();
            }
        }
        let mean = acc / count as f64;
        assert!((mean - 1.0).abs() < 0.2, "mean power {mean}");
    }

    #[test]
    fn identical_inputs_give_identical_bits() {
        let p = make_profile(ProfileKind::NlosLongDelay, SPEED_3_KMH, DELAY_SPREAD_LONG_S, 11).unwrap();
        let a = realize::<f64>(&p, 26, 4, TX, 0.01, 77);
        let b = realize::<f64>(&p, 26, 4, TX, 0.01, 77);
        assert_eq!(a, b);
    }
}
